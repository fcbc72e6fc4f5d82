"""Pauli-frame Bell sampling, sample codecs, parity checks and the lookup decoder."""

import json

import numpy as np
import pytest

from modules import configuration
from modules.enumerators import EnumeratorVector
from modules.errors import ContractViolation, InputFileError, ResourceLimitError
from modules.noise import NoiseModel, noisy_family_enumerators
from modules.sampler.decoder import (
    build_lookup_decoder,
    check_parities,
    correct,
    pauli_frame_update,
    postselect,
)
from modules.sampler.frames import sample_tpd, simulate_bell_circuit, simulate_code_bell_sampling
from modules.sampler.samples import BellSampleSet
from modules.states.families import StateFamily, family_enumerators, prep_circuit
from modules.states.stabilizer import code_enumerators
from modules.transforms import convert

BELL_PREP = [("H", 0), ("CNOT", 0, 1)]


def total_variation(samples, tpd):
    observed = samples.triplet_histogram() / samples.shots
    return 0.5 * float(np.abs(observed - tpd.as_array()).sum())


class TestFrameSimulator:

    def test_identity_prep_gives_only_phi_symbols(self):
        samples = simulate_bell_circuit([], 4, shots=500, seed=3)
        assert set(np.unique(samples.symbols)) <= {0, 2}

    def test_bell_pair_never_has_one_triplet(self):
        samples = simulate_bell_circuit(BELL_PREP, 2, shots=2000, seed=11)
        assert samples.triplet_histogram()[1] == 0
        # Phi+ has tpd (1/4, 0, 3/4)
        assert 0.2 < samples.triplet_histogram()[0] / samples.shots < 0.3

    def test_same_seed_same_samples(self):
        first = simulate_bell_circuit(BELL_PREP, 2, shots=3000, seed=5)
        again = simulate_bell_circuit(BELL_PREP, 2, shots=3000, seed=5)
        np.testing.assert_array_equal(first.symbols, again.symbols)

    def test_seed_changes_samples(self):
        first = simulate_bell_circuit(BELL_PREP, 2, shots=3000, seed=5)
        other = simulate_bell_circuit(BELL_PREP, 2, shots=3000, seed=6)
        assert not np.array_equal(first.symbols, other.symbols)

    def test_worker_count_does_not_change_samples(self):
        serial = simulate_bell_circuit(BELL_PREP, 2, shots=5000, seed=9)
        configuration.active().conf["Sampler"]["workers"] = "4"
        threaded = simulate_bell_circuit(BELL_PREP, 2, shots=5000, seed=9)
        np.testing.assert_array_equal(serial.symbols, threaded.symbols)

    def test_non_clifford_prep(self):
        with pytest.raises(ContractViolation):
            simulate_bell_circuit([("T", 0)], 1, shots=10)

    def test_bad_shot_count(self):
        with pytest.raises(ContractViolation):
            simulate_bell_circuit(BELL_PREP, 2, shots=0)

    def test_provenance(self):
        samples = simulate_bell_circuit(BELL_PREP, 2, NoiseModel(p=0.1), shots=10, seed=1)
        assert samples.provenance["source"] == "circuit"
        assert samples.provenance["p"] == 0.1
        assert samples.seed == 1

    @pytest.mark.slow
    def test_ghz_histogram_matches_tpd(self):
        family = StateFamily("ghz", 3)
        samples = simulate_bell_circuit(prep_circuit(family), 3, shots=100_000, seed=2024)
        assert total_variation(samples, convert(family_enumerators(family), "tpd")) < 0.01

    @pytest.mark.slow
    def test_depolarized_line_graph_matches_noisy_tpd(self):
        family = StateFamily("line_graph", 4)
        samples = simulate_bell_circuit(prep_circuit(family), 4, NoiseModel(p=0.1), shots=100_000, seed=77)
        expected = noisy_family_enumerators(family, 0.1)["tpd"]
        assert total_variation(samples, expected) < 0.01

    @pytest.mark.slow
    @pytest.mark.parametrize("family", [StateFamily("ame6", 6), StateFamily("product_zero", 5)], ids=lambda f: f.label)
    def test_noiseless_family_histograms_match_tpd(self, family):
        samples = simulate_bell_circuit(prep_circuit(family), family.n, shots=100_000, seed=404)
        expected = convert(family_enumerators(family), "tpd")
        assert total_variation(samples, expected) < 0.01

    @pytest.mark.slow
    def test_steane_code_histogram_matches_tpd(self, steane):
        samples = simulate_code_bell_sampling(steane, shots=100_000, seed=405)
        assert total_variation(samples, code_enumerators(steane).tpd()) < 0.01


class TestTpdSampling:

    def test_histogram_sums_to_shots(self):
        tpd = convert(family_enumerators(StateFamily("ghz", 4)), "tpd")
        samples = sample_tpd(tpd, 1234, seed=0)
        assert not samples.per_shot
        assert samples.shots == 1234
        assert samples.triplet_histogram().sum() == 1234

    def test_reproducible(self):
        tpd = convert(family_enumerators(StateFamily("ghz", 4)), "tpd")
        assert sample_tpd(tpd, 500, seed=8).histogram == sample_tpd(tpd, 500, seed=8).histogram

    def test_inadmissible_tpd(self):
        broken = EnumeratorVector(2, "tpd", (1.2, -0.2, 0.0), "float64")
        with pytest.raises(ContractViolation):
            sample_tpd(broken, 10, seed=0)

    def test_needs_tpd(self):
        with pytest.raises(ContractViolation):
            sample_tpd(family_enumerators(StateFamily("ghz", 2)), 10, seed=0)


class TestCodecs:

    def test_binary_codec(self):
        samples = simulate_bell_circuit(BELL_PREP, 2, shots=37, seed=4)
        again = BellSampleSet.from_bytes(samples.to_bytes())
        np.testing.assert_array_equal(again.symbols, samples.symbols)
        assert again.seed == 4
        assert again.provenance == samples.provenance

    def test_binary_histogram(self):
        samples = BellSampleSet.from_histogram([3, 0, 9])
        assert BellSampleSet.from_bytes(samples.to_bytes()).histogram == (3, 0, 9)

    def test_bad_magic(self):
        with pytest.raises(InputFileError):
            BellSampleSet.from_bytes(b"NOPE" + bytes(16))

    def test_json_file_with_wrapper(self, tmp_path):
        samples = BellSampleSet.from_symbols([[0, 3, 1], [2, 2, 3]], seed=1)
        path = tmp_path / "samples.json"
        path.write_text(json.dumps({"metadata": {}, "samples": samples.to_json()}))
        loaded = BellSampleSet.load(str(path))
        np.testing.assert_array_equal(loaded.symbols, samples.symbols)

    def test_malformed_json(self):
        with pytest.raises(InputFileError):
            BellSampleSet.from_json({"n": 2, "shots": 1, "encoding": "symbols", "shots_data": ["07"]})

    def test_histogram_must_match_shots(self):
        with pytest.raises(ContractViolation):
            BellSampleSet(2, 5, "histogram", histogram=(1, 1, 1))

    def test_pooling(self):
        a = BellSampleSet.from_symbols([[0, 3]])
        b = BellSampleSet.from_histogram([1, 0, 2])
        assert a.concat(b).triplet_histogram().tolist() == [1, 1, 2]


class TestParityChecks:

    def test_code_samples_have_trivial_syndrome(self, steane):
        samples = simulate_code_bell_sampling(steane, shots=400, seed=12)
        assert not check_parities(samples.symbols, steane).any()
        _, fraction = postselect(samples, steane)
        assert fraction == 1.0

    def test_frame_update_toggles_symbols(self):
        assert pauli_frame_update([[0, 0, 0]], "XYZ").tolist() == [[1, 3, 2]]

    def test_too_few_shots_for_settings(self, steane):
        with pytest.raises(ContractViolation):
            simulate_code_bell_sampling(steane, shots=1, seed=0)

    def test_postselection_retains_a_fraction(self, steane):
        samples = simulate_code_bell_sampling(steane, NoiseModel(p=0.05), shots=20_000, seed=31)
        kept, fraction = postselect(samples, steane)
        assert 0.2 < fraction < 0.8
        assert kept.shots == round(fraction * samples.shots)
        assert not check_parities(kept.symbols, steane).any()
        assert kept.provenance["postselected"]


class TestLookupDecoder:

    def test_single_qubit_errors_are_their_own_correction(self, steane):
        decoder = build_lookup_decoder(steane)
        clean = simulate_code_bell_sampling(steane, shots=64, seed=21)
        for q in range(7):
            for letter in "XYZ":
                error = "I" * q + letter + "I" * (6 - q)
                hit = clean.with_symbols(pauli_frame_update(clean.symbols, error))
                syndrome = check_parities(hit.symbols[:1], steane)[0]
                assert decoder.correction(syndrome) == error
                np.testing.assert_array_equal(correct(hit, decoder).symbols, clean.symbols)

    def test_table_covers_every_syndrome(self, steane):
        table = build_lookup_decoder(steane).table()
        assert len(table) == 64
        assert table["000000"] == "IIIIIII"

    def test_corrected_samples_have_trivial_syndrome(self, steane):
        noisy = simulate_code_bell_sampling(steane, NoiseModel(p=0.05), shots=2000, seed=3)
        fixed = correct(noisy, build_lookup_decoder(steane))
        assert not check_parities(fixed.symbols, steane).any()
        assert fixed.provenance["corrected"]

    def test_check_limit(self, steane):
        with pytest.raises(ResourceLimitError):
            build_lookup_decoder(steane, max_checks=3)

    def test_histograms_cannot_be_corrected(self, steane):
        with pytest.raises(ContractViolation):
            correct(BellSampleSet.from_histogram([0] * 7 + [1]), build_lookup_decoder(steane))
