"""Dense density matrices and brute-force enumerator oracles.

Qubit 0 is the most significant bit of a basis index. Everything here is
exponential in n and capped by `[Dense] max_qubits`.
"""

import itertools
import json
import logging
from dataclasses import dataclass
from functools import reduce

import numpy as np

from modules import configuration
from modules.enumerators import FLOAT, EnumeratorVector
from modules.errors import ContractViolation, InputFileError, ResourceLimitError, require

logger = logging.getLogger(__name__)

# I, X, Y, Z
PAULIS = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

# rows: Phi+, Psi+, Phi-, Psi- in the |ab> basis, a on the first copy
BELL_BASIS = np.array(
    [
        [1, 0, 0, 1],
        [0, 1, 1, 0],
        [1, 0, 0, -1],
        [0, 1, -1, 0],
    ],
    dtype=float,
) / np.sqrt(2)
SINGLET = 3

_COMMUTE = np.array([[1 if p == 0 or q == 0 or p == q else -1 for q in range(4)] for p in range(4)], dtype=float)


def _check_size(n: int, limit: int = None):
    limit = limit or configuration.active().getInt("Dense", "max_qubits")
    if n > limit:
        raise ResourceLimitError(f"dense computation refused for n={n} (limit {limit} qubits)")


@dataclass(frozen=True, eq=False)
class DenseState:
    n: int
    matrix: np.ndarray

    def __post_init__(self):
        require(isinstance(self.n, int) and self.n >= 1, f"qubit count must be a positive integer, got {self.n}")
        _check_size(self.n)
        matrix = np.array(self.matrix, dtype=complex)
        dim = 2**self.n
        require(matrix.shape == (dim, dim), f"density matrix for n={self.n} must be {dim}x{dim}, got {matrix.shape}")
        require(np.allclose(matrix, matrix.conj().T, rtol=0, atol=1e-12), "density matrix is not Hermitian")
        require(abs(np.trace(matrix).real - 1.0) <= 1e-12 and abs(np.trace(matrix).imag) <= 1e-12,
                f"density matrix has trace {np.trace(matrix)}, not 1")
        smallest = np.linalg.eigvalsh(matrix).min()
        require(smallest >= -1e-10, f"density matrix has negative eigenvalue {smallest}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_matrix(cls, matrix) -> "DenseState":
        matrix = np.asarray(matrix, dtype=complex)
        n = int(round(np.log2(matrix.shape[0])))
        return cls(n, matrix)

    @classmethod
    def pure(cls, vector) -> "DenseState":
        vector = np.asarray(vector, dtype=complex).ravel()
        norm = np.linalg.norm(vector)
        require(norm > 0, "state vector is zero")
        vector = vector / norm
        return cls.from_matrix(np.outer(vector, vector.conj()))

    @property
    def purity(self) -> float:
        return float(np.sum(np.abs(self.matrix) ** 2))

    def to_json(self) -> dict:
        pairs = np.stack([self.matrix.real, self.matrix.imag], axis=-1)
        return {"n": self.n, "matrix": pairs.tolist()}

    @classmethod
    def from_json(cls, data: dict, source="<input>") -> "DenseState":
        try:
            n = int(data["n"])
            pairs = np.asarray(data["matrix"], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise InputFileError(source, f"dense state is missing or has a malformed field ({e})") from e
        if pairs.ndim != 3 or pairs.shape[-1] != 2:
            raise InputFileError(source, "field 'matrix': expected rows of [re, im] pairs")
        return cls(n, pairs[..., 0] + 1j * pairs[..., 1])

    @classmethod
    def load(cls, path: str) -> "DenseState":
        """Read a JSON state, or a raw little-endian float64 file of row-major (re, im) pairs."""
        logger.debug(f"Reading dense state from {path}")
        if path.endswith(".json"):
            with open(path, "r", encoding="utf-8") as f:
                try:
                    data = json.load(f)
                except json.JSONDecodeError as je:
                    raise InputFileError(path, f"invalid JSON ({je.msg})", je.lineno) from je
            return cls.from_json(data, path)
        raw = np.fromfile(path, dtype="<f8")
        dim = int(round(np.sqrt(raw.size / 2)))
        if dim * dim * 2 != raw.size or dim & (dim - 1):
            raise InputFileError(path, f"{raw.size} float64 values do not form a 2^n x 2^n complex matrix")
        pairs = raw.reshape(dim, dim, 2)
        return cls.from_matrix(pairs[..., 0] + 1j * pairs[..., 1])


def pauli_expectations(state: DenseState) -> np.ndarray:
    """Tr[rho P] for all 4^n Pauli strings, as a real tensor of shape (4,)*n."""
    n = state.n
    t = state.matrix.reshape((2,) * (2 * n))
    for k in range(n):
        # contract row and column bit of qubit k; the new Pauli axis lands last
        t = np.tensordot(t, PAULIS, axes=([0, n - k], [2, 1]))
    return t.real


def _weight_tensor(n: int) -> np.ndarray:
    weights = np.zeros((4,) * n, dtype=np.int64)
    nontrivial = (np.arange(4) != 0).astype(np.int64)
    for k in range(n):
        shape = [1] * n
        shape[k] = 4
        weights = weights + nontrivial.reshape(shape)
    return weights


def _by_weight(n: int, tensor: np.ndarray) -> np.ndarray:
    return np.bincount(_weight_tensor(n).ravel(), weights=tensor.ravel(), minlength=n + 1)


def sld_from_dense(state: DenseState) -> EnumeratorVector:
    expectations = pauli_expectations(state)
    sld = _by_weight(state.n, expectations**2) / 2**state.n
    return EnumeratorVector(state.n, "sld", tuple(sld), FLOAT)


def partial_trace(state: DenseState, keep) -> np.ndarray:
    """Reduced density matrix on the qubits in `keep` (in increasing order)."""
    n = state.n
    keep = sorted(keep)
    traced = [q for q in range(n) if q not in keep]
    t = state.matrix.reshape((2,) * (2 * n))
    order = keep + traced + [n + q for q in keep] + [n + q for q in traced]
    dk, dt = 2 ** len(keep), 2 ** len(traced)
    t = t.transpose(order).reshape(dk, dt, dk, dt)
    return np.einsum("atbt->ab", t)


def subsystem_purities(state: DenseState) -> dict:
    """Tr[rho_S^2] for every subset S (the empty subset has purity 1)."""
    purities = {}
    for size in range(state.n + 1):
        for subset in itertools.combinations(range(state.n), size):
            reduced = partial_trace(state, subset)
            purities[subset] = float(np.sum(np.abs(reduced) ** 2))
    return purities


def apd_from_dense(state: DenseState) -> EnumeratorVector:
    totals = np.zeros(state.n + 1)
    counts = np.zeros(state.n + 1)
    for subset, purity in subsystem_purities(state).items():
        totals[len(subset)] += purity
        counts[len(subset)] += 1
    return EnumeratorVector(state.n, "apd", tuple(totals / counts), FLOAT)


def spin_flip(state: DenseState) -> DenseState:
    # Y^n |x> = i^n (-1)^|x| |~x>, so the flip is a signed index reversal of rho^T
    n = state.n
    index = np.arange(2**n)
    signs = np.where(np.bitwise_count(index.astype(np.uint64)) % 2, -1.0, 1.0)
    flipped = index ^ (2**n - 1)
    matrix = np.outer(signs, signs) * state.matrix.T[np.ix_(flipped, flipped)]
    return DenseState(n, matrix)


def tpd_from_dense(state: DenseState) -> EnumeratorVector:
    """Shadow enumerator 2^-n sum_P Tr[rho P rho~ P] by weight of P.

    The sum over P is a symplectic Fourier transform of (-1)^wt(Q) Tr[rho Q]^2, done
    one qubit axis at a time.
    """
    n = state.n
    expectations = pauli_expectations(state)
    weights = _weight_tensor(n)
    t = np.where(weights % 2, -1.0, 1.0) * expectations**2
    for k in range(n):
        t = np.moveaxis(np.tensordot(_COMMUTE, t, axes=([1], [k])), 0, k)
    tpd = _by_weight(n, t) / 4**n
    return EnumeratorVector(n, "tpd", tuple(tpd), FLOAT)


def _pair_permutation(n: int) -> list:
    # qubit order (A0, B0, A1, B1, ...) for rows, then the same for columns
    pairs = [q for k in range(n) for q in (k, n + k)]
    return pairs + [2 * n + q for q in pairs]


def _bell_unitary(n: int) -> np.ndarray:
    return reduce(np.kron, [BELL_BASIS] * n)


def _singlet_counts(n: int) -> np.ndarray:
    digits = np.indices((4,) * n).reshape(n, -1)
    return np.count_nonzero(digits == SINGLET, axis=0)


def bell_projection_tpd(state: DenseState, max_qubits: int = 5) -> EnumeratorVector:
    """Triplet-count distribution of a Bell measurement on every pair of rho (x) rho."""
    n = state.n
    _check_size(n, max_qubits)
    two_copy = np.kron(state.matrix, state.matrix).reshape((2,) * (4 * n))
    paired = two_copy.transpose(_pair_permutation(n)).reshape(4**n, 4**n)
    bell = _bell_unitary(n)
    probabilities = np.einsum("si,ij,sj->s", bell, paired, bell).real
    triplets = n - _singlet_counts(n)
    tpd = np.bincount(triplets, weights=probabilities, minlength=n + 1)
    return EnumeratorVector(n, "tpd", tuple(tpd), FLOAT)


def bell_diagonal_observable(n: int, eigenvalues, max_qubits: int = 5) -> np.ndarray:
    """2n-qubit operator on rho (x) sigma, Bell-diagonal per pair (k, n+k).

    `eigenvalues[s]` is the eigenvalue of every Bell string with s singlets.
    """
    _check_size(n, max_qubits)
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    require(eigenvalues.size == n + 1, f"need {n + 1} eigenvalues, got {eigenvalues.size}")
    bell = _bell_unitary(n)
    paired = bell.T @ np.diag(eigenvalues[_singlet_counts(n)]) @ bell
    inverse = np.argsort(_pair_permutation(n))
    return paired.reshape((2,) * (4 * n)).transpose(inverse).reshape(4**n, 4**n)


def depolarize_dense(state: DenseState, p: float) -> DenseState:
    """Local depolarizing channel on every qubit: rho -> (1-p) rho + p Tr_k[rho] (x) I/2."""
    require(0.0 <= p <= 1.0, f"depolarizing strength must lie in [0, 1], got {p}")
    n = state.n
    t = state.matrix.reshape((2,) * (2 * n))
    half_identity = np.eye(2) / 2
    for k in range(n):
        reduced = np.trace(t, axis1=k, axis2=n + k)
        # reinsert the traced qubit as I/2 at its original axes
        mixed = np.moveaxis(np.tensordot(reduced, half_identity, axes=0), [2 * n - 2, 2 * n - 1], [k, n + k])
        t = (1 - p) * t + p * mixed
    return DenseState(n, t.reshape(2**n, 2**n))


def random_dense_state(n: int, rng: np.random.Generator, rank: int = None) -> DenseState:
    """Ginibre-distributed density matrix of the given rank (full rank by default)."""
    dim = 2**n
    rank = rank or dim
    if rank < 1 or rank > dim:
        raise ContractViolation(f"rank must lie in 1..{dim}, got {rank}")
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DenseState(n, rho / np.trace(rho).real)


def basis_state(n: int, bits) -> np.ndarray:
    index = int("".join(str(int(b)) for b in bits), 2)
    vector = np.zeros(2**n, dtype=complex)
    vector[index] = 1.0
    return vector


def dicke_vector(n: int, e: int) -> np.ndarray:
    """Uniform superposition of all basis states with e excitations."""
    require(0 <= e <= n, f"excitation count must lie in 0..{n}, got {e}")
    index = np.arange(2**n)
    vector = (np.bitwise_count(index.astype(np.uint64)) == e).astype(complex)
    return vector / np.linalg.norm(vector)
