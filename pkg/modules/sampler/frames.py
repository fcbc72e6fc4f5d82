"""Two-copy Bell sampling by Pauli-frame simulation.

A noiseless reference run of the CHP tableau fixes one valid measurement record; every
shot is that record XOR the x-part of a propagated Pauli frame. Frames start with random
Z components (harmless on |0>) so random outcomes are sampled with the right statistics.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from modules import configuration
from modules.enumerators import EnumeratorVector
from modules.errors import ContractViolation, require
from modules.noise import NoiseModel
from modules.sampler.samples import BellSampleSet
from modules.states.stabilizer import StabilizerGroup, css_zero_circuit, logical_x_operators
from modules.states.tableau import StabilizerTableau, shift_circuit, validate_circuit
from modules.utils import progress

logger = logging.getLogger(__name__)


def block_rng(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for one shot block; independent of execution order."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, block, stream, 0]))


def bell_stage(n: int) -> list:
    return [("CNOT", s, n + s) for s in range(n)] + [("H", s) for s in range(n)]


def reference_sample(circuit, n_qubits: int) -> np.ndarray:
    tableau = StabilizerTableau(n_qubits).run(circuit)
    return np.array([tableau.measure(q)[0] for q in range(n_qubits)], dtype=np.uint8)


class FrameSimulator:
    """Vectorized Pauli frames, one row per shot."""

    def __init__(self, shots: int, n_qubits: int, rng: np.random.Generator):
        self.rng = rng
        self.x = np.zeros((shots, n_qubits), dtype=np.uint8)
        self.z = rng.integers(0, 2, size=(shots, n_qubits), dtype=np.uint8)

    def gate(self, gate):
        name, *qubits = gate
        if name == "H":
            (a,) = qubits
            self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()
        elif name == "S":
            (a,) = qubits
            self.z[:, a] ^= self.x[:, a]
        elif name in ("CNOT", "CX"):
            c, t = qubits
            self.x[:, t] ^= self.x[:, c]
            self.z[:, c] ^= self.z[:, t]
        elif name == "CZ":
            a, b = qubits
            self.z[:, a] ^= self.x[:, b]
            self.z[:, b] ^= self.x[:, a]
        # Paulis and identities only change signs, which the reference record carries

    def depolarize(self, qubits, probability: float):
        """Each listed qubit gets X, Y or Z with probability/3 each."""
        if probability <= 0.0:
            return
        shots = self.x.shape[0]
        hit = self.rng.random((shots, len(qubits))) < probability
        kind = self.rng.integers(1, 4, size=(shots, len(qubits)), dtype=np.uint8)
        for column, q in enumerate(qubits):
            self.x[:, q] ^= (hit[:, column] & ((kind[:, column] & 1) == 1)).astype(np.uint8)
            self.z[:, q] ^= (hit[:, column] & ((kind[:, column] >> 1) == 1)).astype(np.uint8)

    def channel(self, qubits, p: float):
        """Local depolarizing channel of strength p: I, X, Y, Z with p/4 each."""
        self.depolarize(qubits, 0.75 * p)


def _run_block(prep_a, prep_b, n, noise, reference, shots, seed, block, stream) -> np.ndarray:
    rng = block_rng(seed, block, stream)
    frames = FrameSimulator(shots, 2 * n, rng)
    for gate in prep_a + prep_b:
        frames.gate(gate)
        frames.depolarize(gate[1:], noise.circuit_error_rate)
    frames.channel(range(2 * n), noise.p)
    for gate in bell_stage(n):
        frames.gate(gate)
        frames.depolarize(gate[1:], noise.circuit_error_rate)
    outcomes = reference[None, :] ^ frames.x
    return (2 * outcomes[:, :n] + outcomes[:, n:]).astype(np.uint8)


def _simulate(prep_a, prep_b, n, noise, shots, seed, stream=0, show_progress=False) -> np.ndarray:
    conf = configuration.active()
    block_size = conf.getInt("Sampler", "block_size")
    workers = conf.getInt("Sampler", "workers")
    circuit = prep_a + prep_b + bell_stage(n)
    validate_circuit(circuit, 2 * n)
    reference = reference_sample(circuit, 2 * n)

    sizes = [min(block_size, shots - start) for start in range(0, shots, block_size)]
    logger.debug(f"Sampling {shots} shots on {n} pairs in {len(sizes)} blocks (stream {stream})")

    def job(block):
        return _run_block(prep_a, prep_b, n, noise, reference, sizes[block], seed, block, stream)

    results = [None] * len(sizes)
    with progress(len(sizes), "Sampling Bell pairs", show_progress) as bar:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for block, symbols in enumerate(pool.map(job, range(len(sizes)))):
                    results[block] = symbols
                    bar()
        else:
            for block in range(len(sizes)):
                results[block] = job(block)
                bar()
    if not results:
        return np.zeros((0, n), dtype=np.uint8)
    return np.vstack(results)


def _check_run(shots: int, seed):
    require(isinstance(shots, int) and shots >= 1, f"shot count must be a positive integer, got {shots}")
    require(isinstance(seed, int) and seed >= 0, f"seed must be a non-negative integer, got {seed}")


def simulate_bell_circuit(prep, n: int, noise: NoiseModel = None, shots: int = 1000, seed: int = 0,
                          show_progress: bool = False) -> BellSampleSet:
    """Bell-sample two copies of prep|0...0> on n qubits each.

    Args:
        prep (list): Clifford gates as tuples, e.g. ("H", 0), ("CNOT", 0, 1).
        n (int): qubits per copy.
        noise (NoiseModel): local depolarizing strength before the Bell stage plus per-gate errors.
        shots (int): number of shots.
        seed (int): RNG key.

    Raises:
        ContractViolation: non-Clifford gate or bad arguments.
    """
    noise = noise or NoiseModel()
    _check_run(shots, seed)
    prep = list(prep)
    validate_circuit(prep, n)
    symbols = _simulate(prep, shift_circuit(prep, n), n, noise, shots, seed, show_progress=show_progress)
    provenance = {"source": "circuit", "gates": len(prep), "p": noise.p, "gate_error": noise.circuit_error_rate}
    return BellSampleSet.from_symbols(symbols, seed, provenance)


def simulate_code_bell_sampling(code: StabilizerGroup, noise: NoiseModel = None, shots: int = 1000, seed: int = 0,
                                show_progress: bool = False) -> BellSampleSet:
    """Bell sampling of the maximally mixed code state of a CSS code.

    Copy A holds |0...0>_L, copy B holds X_L^c|0...0>_L; the 2^k settings c share the
    shots equally (the first shots % 2^k settings get one extra) and are pooled.
    """
    noise = noise or NoiseModel()
    _check_run(shots, seed)
    n, k = code.n, code.k
    encoder = css_zero_circuit(code)
    logicals = logical_x_operators(code)
    settings = 2**k
    if shots < settings:
        raise ContractViolation(f"{shots} shots cannot cover {settings} logical settings")
    pooled = []
    for setting in range(settings):
        flips = np.zeros(n, dtype=np.uint8)
        for j in range(k):
            if (setting >> j) & 1:
                flips ^= logicals[j]
        prep_b = shift_circuit(encoder + [("X", int(q)) for q in np.nonzero(flips)[0]], n)
        count = shots // settings + (1 if setting < shots % settings else 0)
        pooled.append(_simulate(encoder, prep_b, n, noise, count, seed, stream=setting, show_progress=show_progress))
    provenance = {"source": "code", "code": code.name, "settings": settings, "p": noise.p,
                  "gate_error": noise.circuit_error_rate}
    return BellSampleSet.from_symbols(np.vstack(pooled), seed, provenance)


def sample_tpd(tpd: EnumeratorVector, shots: int, seed: int, tolerance: float = 1e-9) -> BellSampleSet:
    """Multinomial triplet-count histogram drawn directly from a TPD."""
    require(tpd.kind == "tpd", f"sample_tpd needs a tpd vector, got {tpd.kind}")
    _check_run(shots, seed)
    tpd.check_distribution(tolerance)
    probabilities = np.clip(tpd.as_array(), 0.0, None)
    probabilities /= probabilities.sum()
    rng = block_rng(seed, 0)
    histogram = rng.multinomial(shots, probabilities)
    return BellSampleSet.from_histogram(histogram, seed, {"source": "tpd"})
