"""Dense oracles, stabilizer groups, code enumerators and the built-in state families."""

from fractions import Fraction

import numpy as np
import pytest

from modules.errors import ContractViolation, InputFileError, ResourceLimitError
from modules.states.dense import (
    DenseState,
    apd_from_dense,
    bell_diagonal_observable,
    bell_projection_tpd,
    depolarize_dense,
    dicke_vector,
    random_dense_state,
    sld_from_dense,
    spin_flip,
    subsystem_purities,
    tpd_from_dense,
)
from modules.noise import depolarize_sld
from modules.states.families import (
    StateFamily,
    build_family_state,
    circuit_statevector,
    dense_family_state,
    dicke_apd,
    family_enumerators,
    family_sld,
    prep_circuit,
    product_sld,
    sld_tensor,
)
from modules.states.stabilizer import (
    StabilizerGroup,
    builtin_code,
    code_enumerators,
    css_zero_circuit,
    logical_x_operators,
    weight_counts,
)
from modules.states.symplectic import gf2_rank, pauli_from_string, pauli_to_string, symplectic_product
from modules.states.tableau import StabilizerTableau
from modules.transforms import convert

SINGLET_VECTOR = np.array([0, 1, -1, 0]) / np.sqrt(2)


class TestSymplectic:

    def test_string_round_trip(self):
        assert pauli_to_string(pauli_from_string("XIZY")) == "XIZY"

    def test_sign_is_ignored(self):
        assert pauli_to_string(pauli_from_string("-ZZ")) == "ZZ"

    def test_bad_letter(self):
        with pytest.raises(ContractViolation):
            pauli_from_string("XQ")

    def test_commutation(self):
        paulis = np.array([pauli_from_string(p) for p in ("XX", "ZZ", "XI")])
        assert symplectic_product(paulis, paulis).tolist() == [[0, 0, 0], [0, 0, 1], [0, 1, 0]]

    def test_rank(self):
        assert gf2_rank(np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]], dtype=np.uint8)) == 2


class TestTableau:

    def test_bell_pair_stabilizers(self):
        tableau = StabilizerTableau(2).run([("H", 0), ("CNOT", 0, 1)])
        group = StabilizerGroup(2, tableau.stabilizers())
        for label in ("XX", "ZZ"):
            assert gf2_rank(np.vstack([group.generators, pauli_from_string(label)])) == 2

    def test_deterministic_measurement(self):
        tableau = StabilizerTableau(3).run([("X", 1)])
        assert tableau.measure(1) == (1, False)
        assert tableau.measure(0) == (0, False)

    def test_random_measurement_then_repeat(self, rng):
        tableau = StabilizerTableau(2).run([("H", 0), ("CNOT", 0, 1)])
        first, random = tableau.measure(0, rng)
        assert random
        # the partner qubit is now fixed to the same value
        assert tableau.measure(1) == (first, False)

    def test_non_clifford_gate(self):
        with pytest.raises(ContractViolation):
            StabilizerTableau(1).run([("T", 0)])

    def test_qubit_out_of_range(self):
        with pytest.raises(ContractViolation):
            StabilizerTableau(2).run([("CNOT", 0, 2)])


class TestStabilizerGroup:

    def test_non_commuting_generators(self):
        with pytest.raises(ContractViolation):
            StabilizerGroup.from_strings(["XI", "ZI"])

    def test_dependent_generators(self):
        with pytest.raises(ContractViolation):
            StabilizerGroup.from_strings(["ZZ", "ZZ"])

    def test_text_codec(self, steane):
        again = StabilizerGroup.from_text(steane.to_text())
        assert again.to_strings() == steane.to_strings()

    def test_text_error_carries_line(self):
        with pytest.raises(InputFileError) as excinfo:
            StabilizerGroup.from_text("# header\nXXXX\nXXQX\n", "code.stab")
        assert excinfo.value.line == 3

    def test_json_codec(self):
        code = builtin_code("five-qubit")
        assert StabilizerGroup.from_json(code.to_json()).to_strings() == code.to_strings()

    def test_file_load(self, tmp_path, steane):
        path = tmp_path / "steane.stab"
        path.write_text(steane.to_text())
        assert StabilizerGroup.load(str(path)).k == 1

    def test_from_circuit(self):
        group = StabilizerGroup.from_circuit(3, [("H", 0), ("CNOT", 0, 1), ("CNOT", 0, 2)])
        assert group.k == 0
        assert weight_counts(group.generators) == [1, 0, 3, 4]


class TestCodeEnumerators:

    def test_steane(self, steane):
        enums = code_enumerators(steane)
        assert enums.A == (1, 0, 0, 0, 21, 0, 42, 0)
        assert enums.B == (1, 0, 0, 21, 21, 126, 42, 45)
        assert enums.A_shadow == enums.B

    def test_five_qubit_code(self):
        enums = code_enumerators(builtin_code("five-qubit"))
        assert enums.A == (1, 0, 0, 0, 15, 0)
        assert enums.B == (1, 0, 0, 30, 15, 18)

    def test_zz_check(self):
        enums = code_enumerators(builtin_code("zz-check"))
        assert enums.A == (1, 0, 1)
        assert enums.B == (1, 2, 5)

    def test_odd_weight_generators_shift_the_shadow(self):
        # stabilizer state |000>: shadow is a coset, not the group itself
        enums = code_enumerators(StabilizerGroup.from_strings(["ZII", "IZI", "IIZ"]))
        assert enums.A == (1, 3, 3, 1)
        assert enums.A_shadow == (0, 0, 0, 8)

    def test_normalizations(self, steane):
        # sld sums to the code-state purity 2^-k
        enums = code_enumerators(steane)
        assert enums.sld().total() == Fraction(1, 2)
        assert enums.dual_sld().total() == Fraction(1)
        assert enums.tpd().total() == Fraction(1)

    def test_shadow_enumerator_is_transformed_sld(self, steane):
        enums = code_enumerators(steane)
        assert convert(enums.sld(), "tpd") == enums.tpd()

    def test_enumeration_limit(self, steane):
        with pytest.raises(ResourceLimitError):
            weight_counts(steane.normalizer(), limit_log2=4)

    def test_css_encoder_prepares_logical_zero(self, steane):
        group = StabilizerGroup.from_circuit(7, css_zero_circuit(steane))
        stacked = np.vstack([group.generators, steane.generators])
        # |0>_L is stabilized by the code plus logical Z
        assert gf2_rank(stacked) == 7

    def test_logical_x_anticommutes_with_logical_z(self, steane):
        logical = logical_x_operators(steane)
        assert logical.shape == (1, 7)
        assert int(logical[0].sum()) % 2 == 1


class TestDenseOracles:

    @pytest.mark.parametrize("seed", range(25))
    def test_shadow_enumerator_identity(self, seed):
        rng = np.random.default_rng(seed)
        n = 1 + seed % 4
        state = random_dense_state(n, rng, rank=min(1 + seed % 3, 2**n))
        tpd = tpd_from_dense(state).as_array()
        np.testing.assert_allclose(tpd, convert(sld_from_dense(state), "tpd").as_array(), atol=1e-10)
        if n <= 3:
            np.testing.assert_allclose(bell_projection_tpd(state).as_array(), tpd, atol=1e-10)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_apd_identity(self, n, rng):
        state = random_dense_state(n, rng)
        np.testing.assert_allclose(
            apd_from_dense(state).as_array(), convert(sld_from_dense(state), "apd").as_array(), atol=1e-10
        )

    def test_sld_sums_to_purity(self, rng):
        state = random_dense_state(3, rng, rank=2)
        assert sld_from_dense(state).as_array().sum() == pytest.approx(state.purity, abs=1e-12)

    def test_two_qubit_ground_truth(self):
        bell = DenseState.pure(np.array([1, 0, 0, 1]) / np.sqrt(2))
        product = DenseState.pure(np.array([1, 0, 0, 0]))
        np.testing.assert_allclose(sld_from_dense(bell).as_array(), [0.25, 0, 0.75], atol=1e-12)
        np.testing.assert_allclose(sld_from_dense(product).as_array(), [0.25, 0.5, 0.25], atol=1e-12)
        np.testing.assert_allclose(apd_from_dense(bell).as_array(), [1, 0.5, 1], atol=1e-12)
        np.testing.assert_allclose(apd_from_dense(product).as_array(), [1, 1, 1], atol=1e-12)

    def test_singlet_is_spin_flip_invariant(self):
        singlet = DenseState.pure(SINGLET_VECTOR)
        np.testing.assert_allclose(spin_flip(singlet).matrix, singlet.matrix, atol=1e-12)

    def test_singlet_bell_projection(self):
        singlet = DenseState.pure(SINGLET_VECTOR)
        tpd = bell_projection_tpd(singlet).as_array()
        np.testing.assert_allclose(tpd, tpd_from_dense(singlet).as_array(), atol=1e-12)

    def test_subsystem_purities(self, rng):
        state = random_dense_state(3, rng)
        purities = subsystem_purities(state)
        assert purities[()] == pytest.approx(1.0)
        assert purities[(0, 1, 2)] == pytest.approx(state.purity)

    def test_depolarizing_channel_damps_sector_lengths(self, rng):
        state = random_dense_state(3, rng, rank=1)
        noisy = sld_from_dense(depolarize_dense(state, 0.3)).as_array()
        expected = depolarize_sld(sld_from_dense(state), 0.3).as_array()
        np.testing.assert_allclose(noisy, expected, atol=1e-12)

    def test_bell_diagonal_observable_expectation(self, rng):
        state = random_dense_state(2, rng)
        # eigenvalue 1 on strings without singlets measures tpd_n
        observable = bell_diagonal_observable(2, [1.0, 0.0, 0.0])
        value = np.trace(observable @ np.kron(state.matrix, state.matrix)).real
        assert value == pytest.approx(tpd_from_dense(state)[2], abs=1e-12)

    def test_not_hermitian(self):
        with pytest.raises(ContractViolation):
            DenseState(1, np.array([[0.5, 0.5], [0.0, 0.5]]))

    def test_size_limit(self):
        with pytest.raises(ResourceLimitError):
            DenseState(13, np.zeros((1, 1)))

    def test_json_codec(self, rng):
        state = random_dense_state(2, rng)
        np.testing.assert_allclose(DenseState.from_json(state.to_json()).matrix, state.matrix)


class TestFamilies:

    @pytest.mark.parametrize("n", range(2, 7))
    def test_dicke_apd_matches_dense(self, n):
        for e in range(0, n // 2 + 1):
            dense = apd_from_dense(DenseState.pure(dicke_vector(n, e))).as_array()
            np.testing.assert_allclose(dicke_apd(n, e).as_array(), dense, atol=1e-12)

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [7, 8])
    def test_dicke_apd_matches_dense_large(self, n):
        for e in range(0, n // 2 + 1):
            dense = apd_from_dense(DenseState.pure(dicke_vector(n, e))).as_array()
            np.testing.assert_allclose(dicke_apd(n, e).as_array(), dense, atol=1e-12)

    @pytest.mark.parametrize(
        "family",
        [
            StateFamily("product_zero", 3),
            StateFamily("bell_pairs", 4),
            StateFamily("ghz", 4),
            StateFamily("ghz", 5, e=3),
            StateFamily("line_graph", 4),
            StateFamily("cycle_graph", 5),
            StateFamily("dicke", 4, e=2),
            StateFamily("ame6", 6),
            StateFamily("superposition", 3, p=Fraction(1, 3)),
            StateFamily("mixture", 3, p=Fraction(1, 3)),
            StateFamily("maximally_mixed", 3),
        ],
        ids=lambda f: f.label,
    )
    def test_closed_forms_match_dense(self, family):
        expected = sld_from_dense(dense_family_state(family)).as_array()
        np.testing.assert_allclose(family_sld(family).as_array(), expected, atol=1e-10)

    def test_bell_pair_family(self):
        assert family_sld(StateFamily("bell_pairs", 2)).values == (Fraction(1, 4), 0, Fraction(3, 4))

    def test_ame6_is_three_uniform(self):
        sld = family_sld(StateFamily("ame6", 6))
        assert sld.values[1:4] == (0, 0, 0)
        concurrence = 1 - convert(sld, "tpd").as_array()[6]
        assert concurrence == pytest.approx(0.719, abs=1e-3)

    def test_two_design_average(self):
        sld = family_sld(StateFamily("two_design_average", 4))
        assert sld.total() == Fraction(1)

    def test_maximally_mixed_enumerator(self):
        tpd = family_enumerators(StateFamily("maximally_mixed", 2))
        assert tpd.kind == "tpd"
        assert tpd.values == (Fraction(1, 16), Fraction(6, 16), Fraction(9, 16))

    def test_sld_tensor(self):
        bell = family_sld(StateFamily("bell_pairs", 2))
        assert sld_tensor(bell, bell) == family_sld(StateFamily("bell_pairs", 4))
        assert sld_tensor(bell, product_sld(1)).values == (
            Fraction(1, 8), Fraction(1, 8), Fraction(3, 8), Fraction(3, 8)
        )
        mixed = sld_tensor(bell.to_float(), product_sld(1))
        np.testing.assert_allclose(mixed.as_array(), [0.125, 0.125, 0.375, 0.375])

    def test_sld_tensor_kinds(self):
        with pytest.raises(ContractViolation):
            sld_tensor(product_sld(1), convert(product_sld(1), "apd"))

    def test_build_family_state(self):
        group = build_family_state(StateFamily("ghz", 4))
        assert isinstance(group, StabilizerGroup)
        assert code_enumerators(group).sld() == family_sld(StateFamily("ghz", 4))
        assert isinstance(build_family_state(StateFamily("dicke", 4, e=1)), DenseState)

    def test_circuit_statevector(self):
        vector = circuit_statevector(2, prep_circuit(StateFamily("bell_pairs", 2)))
        np.testing.assert_allclose(vector, np.array([1, 0, 0, 1]) / np.sqrt(2), atol=1e-12)

    def test_parameter_validation(self):
        with pytest.raises(ContractViolation):
            StateFamily("ghz", 3, e=5)
        with pytest.raises(ContractViolation):
            StateFamily("bell_pairs", 3)
        with pytest.raises(ContractViolation):
            StateFamily("mixture", 3)
        with pytest.raises(ContractViolation):
            StateFamily("ame6", 5)

    @pytest.mark.parametrize("e", [0, 1, 2])
    def test_cycle_needs_three_qubits(self, e):
        with pytest.raises(ContractViolation, match="cycle_graph"):
            StateFamily("cycle_graph", 4, e=e)

    def test_triangle_is_ghz_like(self):
        assert family_sld(StateFamily("cycle_graph", 3)) == family_sld(StateFamily("ghz", 3))

    def test_float_parameter_is_kept_exact(self):
        assert StateFamily("mixture", 2, p=0.1).p == Fraction(1, 10)

    def test_ensemble_has_no_dense_state(self):
        with pytest.raises(ContractViolation):
            dense_family_state(StateFamily("two_design_average", 2))

    def test_dicke_has_no_clifford_circuit(self):
        with pytest.raises(ContractViolation):
            prep_circuit(StateFamily("dicke", 3, e=1))
