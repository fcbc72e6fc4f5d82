"""Transform algebra: involutions, compositions, closed forms, conversions and norms."""

import math
from fractions import Fraction

import numpy as np
import pytest

from modules.enumerators import EXACT, FLOAT, EnumeratorVector
from modules.errors import ContractViolation, PrecisionError
from modules.transforms import (
    TransformKind,
    apply_transform,
    build_transform,
    convert,
    identity_matrix,
    matrix_frame,
    multiply,
    operator_norm,
    round_trip_residual,
    transform_between,
)

BELL_SLD = EnumeratorVector.of("sld", [Fraction(1, 4), 0, Fraction(3, 4)])
PRODUCT_SLD = EnumeratorVector.of("sld", [Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)])


def sizes(upper, fast):
    return [n if n <= fast else pytest.param(n, marks=pytest.mark.slow) for n in range(1, upper + 1)]


class TestMatrixAlgebra:

    @pytest.mark.parametrize("n", sizes(64, 21))
    @pytest.mark.parametrize("kind", ["M", "M_prime", "M_tilde"])
    def test_macwilliams_maps_are_involutions(self, n, kind):
        m = build_transform(kind, n)
        assert (multiply(m, m) == identity_matrix(n)).all()

    @pytest.mark.parametrize("n", sizes(64, 10))
    def test_shadow_map_factorizes(self, n):
        product = multiply(
            build_transform("M", n), build_transform("M_prime", n), build_transform("M_tilde", n),
            build_transform("M_prime", n),
        )
        assert (product == build_transform("T_tilde", n).exact_entries).all()

    @pytest.mark.parametrize("n", sizes(64, 8))
    def test_unitary_macwilliams_is_conjugate_of_sector_map(self, n):
        product = multiply(build_transform("T_prime", n), build_transform("M", n), build_transform("T_prime_inv", n))
        assert (product == build_transform("M_prime", n).exact_entries).all()

    @pytest.mark.parametrize("n", sizes(64, 9))
    @pytest.mark.parametrize(
        "forward, backward",
        [("T_prime", "T_prime_inv"), ("T_tilde", "T_tilde_inv"), ("T_tilde_prime", "T_tilde_prime_inv")],
    )
    def test_inverse_pairs(self, n, forward, backward):
        product = multiply(build_transform(forward, n), build_transform(backward, n))
        assert (product == identity_matrix(n)).all()

    @pytest.mark.parametrize("n", sizes(32, 12))
    @pytest.mark.parametrize("kind", list(TransformKind))
    def test_recurrence_matches_closed_form(self, n, kind):
        lattice = build_transform(kind, n, method="recurrence").exact_entries
        closed = build_transform(kind, n, method="closed_form").exact_entries
        assert (lattice == closed).all()

    def test_two_qubit_macwilliams_entries(self):
        m = build_transform("M", 1)
        expected = [[Fraction(1, 2), Fraction(1, 2)], [Fraction(3, 2), Fraction(-1, 2)]]
        assert m.exact_entries.tolist() == expected

    def test_float_product_of_float_matrices(self):
        m = build_transform("M", 4, FLOAT)
        np.testing.assert_allclose(multiply(m, m), np.eye(5), atol=1e-12)


class TestConversions:

    def test_bell_pair_apd(self):
        assert convert(BELL_SLD, "apd").values == (1, Fraction(1, 2), 1)

    def test_product_state_apd(self):
        assert convert(PRODUCT_SLD, "apd").values == (1, 1, 1)

    def test_maximally_mixed_tpd(self):
        sld = EnumeratorVector.of("sld", [Fraction(1, 8), 0, 0, 0])
        tpd = convert(sld, "tpd")
        assert tpd.values == tuple(Fraction(math.comb(3, i) * 3**i, 64) for i in range(4))

    def test_exact_round_trip_through_tpd(self):
        assert convert(convert(BELL_SLD, "tpd"), "sld") == BELL_SLD

    def test_dual_kinds_reach_primal(self):
        dual = convert(PRODUCT_SLD, "dual_tpd")
        assert dual.kind == "dual_tpd"
        assert convert(dual, "sld") == PRODUCT_SLD

    def test_round_trip_residual_is_zero_in_exact_mode(self):
        assert round_trip_residual(BELL_SLD, "apd") == 0.0

    def test_float_round_trip(self, rng):
        values = rng.random(7)
        vec = EnumeratorVector(6, "sld", tuple(values / values.sum()), FLOAT)
        assert round_trip_residual(vec, "tpd") < 1e-12

    def test_wrong_source_kind(self):
        with pytest.raises(ContractViolation):
            apply_transform(build_transform("M_prime", 2), BELL_SLD)

    def test_transform_between(self):
        assert transform_between("sld", "apd", 3).kind == TransformKind.T_prime
        assert transform_between("dual_sld", "sld", 3).kind == TransformKind.M
        assert transform_between("tpd", "tpd", 3) is None
        with pytest.raises(ContractViolation):
            transform_between("sld", "dual_apd", 3)

    def test_matrix_frame_shape(self):
        df = matrix_frame(build_transform("T_tilde", 5))
        assert df.shape == (6, 6)
        assert df.index.name == "i"


class TestLimits:

    def test_unknown_kind(self):
        with pytest.raises(ContractViolation):
            build_transform("W", 3)

    def test_float_limit(self):
        with pytest.raises(PrecisionError):
            build_transform("M", 1030, FLOAT)

    def test_exact_mode_handles_large_n(self):
        m = build_transform("M_tilde", 300, EXACT)
        assert m.exact_entries[300, 300] == 1


class TestOperatorNorm:

    @pytest.mark.parametrize(
        "n", [10, 50, 100, pytest.param(250, marks=pytest.mark.slow), pytest.param(500, marks=pytest.mark.slow)]
    )
    def test_krawtchouk_inverse_norm_bound(self, n):
        norm = operator_norm(build_transform("T_tilde_prime_inv", n, FLOAT))
        assert norm <= 1.25 * math.sqrt(n)

    @pytest.mark.parametrize("kind", ["M_prime", "M_tilde"])
    def test_permutation_like_maps_have_unit_norm(self, kind):
        assert operator_norm(build_transform(kind, 20, FLOAT)) == pytest.approx(1.0, abs=1e-9)

    def test_matches_numpy_svd(self):
        m = build_transform("T_prime", 8, FLOAT)
        expected = np.linalg.svd(m.float_entries, compute_uv=False)[0]
        assert operator_norm(m) == pytest.approx(expected, rel=1e-8)
