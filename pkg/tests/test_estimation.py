import math
from fractions import Fraction

import numpy as np
import pytest

from modules.enumerators import FLOAT, KINDS, EnumeratorVector
from modules.errors import ContractViolation
from modules.estimation import (
    EstimationReport,
    build_estimator_tables,
    estimate_enumerators,
    fit_depolarizing_mitigation,
    fit_mitigation,
    hoeffding_samples,
    mitigate,
    mitigated_vectors,
    samples_required,
    sld_variance,
    table_expectation,
)
from modules.noise import depolarize_sld, purity_after_noise
from modules.sampler.frames import sample_tpd, simulate_code_bell_sampling
from modules.sampler.samples import BellSampleSet
from modules.states.families import StateFamily, family_enumerators, family_sld, product_sld
from modules.transforms import convert
from modules.utils import to_float

UNBIASED_FAMILIES = [
    StateFamily("ghz", 6),
    StateFamily("line_graph", 6),
    StateFamily("dicke", 6, e=3),
    StateFamily("two_design_average", 6),
    StateFamily("mixture", 6, p=Fraction(1, 3)),
    StateFamily("maximally_mixed", 6),
]


def family_tpd(family):
    return convert(family_enumerators(family), "tpd")


class TestEstimatorTables:

    @pytest.mark.parametrize("n", [2, 6, 12])
    @pytest.mark.parametrize("kind", KINDS)
    def test_expectation_is_the_transformed_tpd(self, n, kind):
        table = build_estimator_tables(n)
        for family in (StateFamily("ghz", n), StateFamily("two_design_average", n), StateFamily("product_zero", n)):
            tpd = family_tpd(family)
            assert table_expectation(table, kind, tpd) == convert(tpd, kind)

    @pytest.mark.parametrize("family", UNBIASED_FAMILIES, ids=lambda f: f.label)
    def test_float_expectation(self, family):
        table = build_estimator_tables(6)
        tpd = family_tpd(family).to_float()
        for kind in KINDS:
            np.testing.assert_allclose(
                table_expectation(table, kind, tpd).as_array(), convert(tpd, kind).as_array(), atol=1e-10
            )

    def test_identity_component_is_constant(self):
        table = build_estimator_tables(5)
        assert set(table.exact("sld")[0]) == {Fraction(1, 32)}

    def test_dual_tables_flip_odd_singlet_columns(self):
        table = build_estimator_tables(3)
        np.testing.assert_array_equal(table.exact("dual_tpd")[:, 1], -table.exact("tpd")[:, 1])
        np.testing.assert_array_equal(table.exact("dual_tpd")[:, 2], table.exact("tpd")[:, 2])

    @pytest.mark.slow
    def test_large_table(self):
        table = build_estimator_tables(1000)
        rows, dens = table.rows("sld")
        assert len(rows) == 1001
        assert all(Fraction(v, dens[0]) == Fraction(1, 2**1000) for v in rows[0])


class TestEstimate:

    def test_all_triplet_shots_give_the_product_sld(self):
        n = 5
        report = estimate_enumerators(BellSampleSet.from_histogram([0] * n + [400]), bootstrap_resamples=50, seed=1)
        expected = [math.comb(n, i) / 2**n for i in range(n + 1)]
        np.testing.assert_allclose(report.vectors["sld"].as_array(), expected, atol=1e-15)
        assert report.purity == 1.0
        assert report.mean_triplets == n
        np.testing.assert_allclose(report.stderr["sld"], 0.0, atol=1e-15)

    def test_all_kinds_are_reported(self):
        samples = sample_tpd(family_tpd(StateFamily("ghz", 4)), 2000, seed=3)
        report = estimate_enumerators(samples, bootstrap_resamples=100)
        assert set(report.vectors) == set(KINDS)
        assert all(v.precision == FLOAT for v in report.vectors.values())
        for kind, (lower, upper) in report.ci.items():
            assert np.all(lower <= report.vectors[kind].as_array() + 1e-12)
            assert np.all(report.vectors[kind].as_array() <= upper + 1e-12)

    def test_margin_errors_come_with_bootstrap(self):
        samples = sample_tpd(family_tpd(StateFamily("ghz", 3)), 1000, seed=3)
        assert set(estimate_enumerators(samples, bootstrap_resamples=200).margin_stderr) == {
            "n_body", "purity", "concurrence"
        }
        assert estimate_enumerators(samples, bootstrap_resamples=0).margin_stderr == {}

    def test_bootstrap_is_seeded(self):
        samples = sample_tpd(family_tpd(StateFamily("ghz", 4)), 2000, seed=3)
        first = estimate_enumerators(samples, bootstrap_resamples=100, seed=10)
        again = estimate_enumerators(samples, bootstrap_resamples=100, seed=10)
        np.testing.assert_array_equal(first.ci["sld"][0], again.ci["sld"][0])

    def test_report_json(self):
        samples = sample_tpd(family_tpd(StateFamily("ghz", 3)), 1000, seed=3)
        report = estimate_enumerators(samples, bootstrap_resamples=100)
        again = EstimationReport.from_json(report.to_json())
        assert again.vectors == report.vectors
        assert again.margin_stderr == report.margin_stderr
        np.testing.assert_allclose(again.stderr["tpd"], report.stderr["tpd"])

    def test_empty_sample_set(self):
        with pytest.raises(ContractViolation):
            estimate_enumerators(BellSampleSet.from_histogram([0, 0, 0]))

    def test_table_size_mismatch(self):
        with pytest.raises(ContractViolation):
            estimate_enumerators(BellSampleSet.from_histogram([1, 1, 1]), build_estimator_tables(3))

    @pytest.mark.slow
    def test_steane_estimates_bracket_the_code_enumerators(self, steane):
        exact = np.array([1, 0, 0, 0, 21, 0, 42, 0]) / 2**7
        inside = 0
        for seed in range(20):
            samples = simulate_code_bell_sampling(steane, shots=100_000, seed=seed)
            lower, upper = estimate_enumerators(samples, bootstrap_resamples=1000).ci["sld"]
            inside += int(np.count_nonzero((lower - 1e-12 <= exact) & (exact <= upper + 1e-12)))
        assert inside >= 0.9 * 20 * exact.size


class TestVariance:

    def test_product_state_has_no_variance(self):
        assert sld_variance(family_tpd(StateFamily("product_zero", 8))).total == 0

    def test_variance_scales_with_shots(self):
        tpd = family_tpd(StateFamily("ghz", 5))
        assert sld_variance(tpd, 10).total == sld_variance(tpd, 1).total / 10

    def test_float_matches_exact(self):
        tpd = family_tpd(StateFamily("dicke", 6, e=3))
        exact = sld_variance(tpd).total
        assert sld_variance(tpd.to_float()).total == pytest.approx(to_float(exact), rel=1e-10)

    def test_two_design_budget(self):
        n = samples_required(family_tpd(StateFamily("two_design_average", 200)), 1e-4)
        assert 5e3 <= n <= 2e4

    def test_ghz_budget_explodes(self):
        assert samples_required(family_tpd(StateFamily("ghz", 50)), 1e-4) > 1e15

    def test_needs_tpd_and_shots(self):
        with pytest.raises(ContractViolation):
            sld_variance(family_sld(StateFamily("ghz", 3)))
        with pytest.raises(ContractViolation):
            sld_variance(family_tpd(StateFamily("ghz", 3)), 0)

    @pytest.mark.slow
    def test_empirical_variance_matches_prediction(self):
        tpd = family_tpd(StateFamily("ghz", 6))
        table = build_estimator_tables(6)
        runs = np.array([
            estimate_enumerators(sample_tpd(tpd, 1000, seed), table, bootstrap_resamples=0).vectors["sld"].as_array()
            for seed in range(2000)
        ])
        predicted = to_float(sld_variance(tpd, 1000).total)
        assert runs.var(axis=0, ddof=1).sum() == pytest.approx(predicted, rel=0.1)


class TestHoeffding:

    def test_tpd(self):
        assert hoeffding_samples("tpd", 10, 0.01, 0.05) == 18445

    def test_apd_needs_four_times_as_many(self):
        assert abs(hoeffding_samples("apd", 10, 0.01, 0.05) - 4 * 18445) <= 4
        assert hoeffding_samples("apd", 10, 0.01, 0.05) == 73778

    def test_rounds_once(self):
        # spread 3 for the weight-one entry at n = 2
        assert hoeffding_samples("sld", 2, 0.01, 0.05, index=1) == 166000
        assert hoeffding_samples("sld", 2, 0.01, 0.05, index=1) < 9 * 18445

    def test_dual_kinds_share_the_range(self):
        assert hoeffding_samples("dual_sld", 6, 0.01, 0.05) == hoeffding_samples("sld", 6, 0.01, 0.05)

    def test_identity_component_gets_cheaper_with_n(self):
        counts = [hoeffding_samples("sld", n, 0.01, 0.05, index=0) for n in (2, 4, 8)]
        assert counts == sorted(counts, reverse=True)

    def test_simultaneous_bound_is_larger(self):
        assert hoeffding_samples("tpd", 10, 0.01, 0.05, simultaneous=True) > 18445

    def test_degenerate_targets(self):
        with pytest.raises(ContractViolation):
            hoeffding_samples("tpd", 4, 0.0, 0.05)
        with pytest.raises(ContractViolation):
            hoeffding_samples("tpd", 4, 0.01, 1.0)


class TestMitigation:

    @pytest.fixture
    def product_model(self):
        ideal = product_sld(6)
        raw = depolarize_sld(ideal, Fraction(2, 100)).to_float()
        return fit_mitigation(raw, ideal.to_float(), "product")

    def test_damping_factors(self, product_model):
        np.testing.assert_allclose(product_model.lambdas, [0.98 ** (2 * i) for i in range(7)], rtol=1e-12)

    def test_recovers_depolarized_ghz(self, product_model):
        ideal = family_sld(StateFamily("ghz", 6))
        raw = depolarize_sld(ideal, Fraction(2, 100)).to_float()
        np.testing.assert_allclose(mitigate(raw, product_model).as_array(), ideal.to_float().as_array(), atol=1e-10)

    def test_mitigated_vectors_follow_the_sld(self, product_model):
        raw = depolarize_sld(family_sld(StateFamily("ghz", 6)), Fraction(2, 100)).to_float()
        vectors = mitigated_vectors(raw, product_model)
        np.testing.assert_allclose(
            vectors["tpd"].as_array(), convert(vectors["sld"], "tpd").as_array(), atol=1e-12
        )

    def test_equal_vectors_give_unit_factors(self):
        ideal = product_sld(4).to_float()
        model = fit_mitigation(ideal, ideal)
        assert model.lambdas == (1.0,) * 5
        assert mitigate(ideal, model) == ideal

    def test_zero_ideal_entries_are_flagged(self):
        ideal = family_sld(StateFamily("ghz", 4)).to_float()
        model = fit_mitigation(ideal, ideal)
        assert model.zero_ideal == (1, 3)

    def test_growth_is_clamped(self):
        ideal = product_sld(2).to_float()
        raw = EnumeratorVector(2, "sld", (0.25, 0.6, 0.25), FLOAT)
        model = fit_mitigation(raw, ideal)
        assert model.lambdas[1] == 1.0
        assert model.clamped == (1,)

    def test_purity_matched_factors(self):
        ideal = family_sld(StateFamily("ghz", 5)).to_float()
        model = fit_depolarizing_mitigation(purity_after_noise(ideal, 0.05), ideal)
        np.testing.assert_allclose(model.lambdas, [0.95 ** (2 * i) for i in range(6)], rtol=1e-6)

    def test_size_mismatch(self, product_model):
        with pytest.raises(ContractViolation):
            mitigate(product_sld(3).to_float(), product_model)
