"""Built-in state families: closed-form enumerators, preparation circuits, dense oracles."""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from modules.enumerators import EXACT, FLOAT, EnumeratorVector
from modules.errors import ContractViolation, require
from modules.states.dense import PAULIS, DenseState, basis_state, dicke_vector
from modules.states.stabilizer import StabilizerGroup, code_enumerators
from modules.states.tableau import validate_circuit
from modules.transforms import convert
from modules.utils import binomial_row

logger = logging.getLogger(__name__)

FAMILIES = (
    "product_zero",
    "bell_pairs",
    "ghz",
    "line_graph",
    "cycle_graph",
    "dicke",
    "ame6",
    "superposition",
    "mixture",
    "two_design_average",
    "maximally_mixed",
)
STABILIZER_FAMILIES = {"product_zero", "bell_pairs", "ghz", "line_graph", "cycle_graph", "ame6"}

# triangular prism: two triangles joined by three rungs
AME6_EDGES = ((0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5))


@dataclass(frozen=True)
class StateFamily:
    tag: str
    n: int
    e: int = None
    p: Fraction = None

    def __post_init__(self):
        require(self.tag in FAMILIES, f"unknown state family: {self.tag}")
        require(isinstance(self.n, int) and self.n >= 1, f"qubit count must be a positive integer, got {self.n}")
        if self.tag in ("ghz", "cycle_graph", "dicke"):
            e = self.n if self.e is None else self.e
            require(isinstance(e, int) and 0 <= e <= self.n, f"{self.tag}: e must lie in 0..{self.n}, got {e}")
            if self.tag == "ghz":
                require(e >= 1, "ghz needs at least one qubit")
            if self.tag == "cycle_graph":
                require(e >= 3, f"cycle_graph needs a ring of at least 3 qubits, got e={e}")
            object.__setattr__(self, "e", e)
        if self.tag in ("superposition", "mixture"):
            require(self.p is not None, f"{self.tag} needs a parameter p")
            p = Fraction(str(self.p)) if isinstance(self.p, float) else Fraction(self.p)
            require(0 <= p <= 1, f"{self.tag}: p must lie in [0, 1], got {p}")
            object.__setattr__(self, "p", p)
        if self.tag == "bell_pairs":
            require(self.n % 2 == 0, f"bell_pairs needs an even qubit count, got {self.n}")
        if self.tag == "ame6":
            require(self.n == 6, f"ame6 is a six-qubit state, got n={self.n}")

    @property
    def is_stabilizer(self) -> bool:
        return self.tag in STABILIZER_FAMILIES

    @property
    def label(self) -> str:
        if self.tag in ("ghz", "cycle_graph", "dicke"):
            return f"{self.tag}({self.e})"
        if self.tag in ("superposition", "mixture"):
            return f"{self.tag}({self.p})"
        return self.tag


def sld_tensor(a: EnumeratorVector, b: EnumeratorVector) -> EnumeratorVector:
    """SLD of a product state: the convolution of the factors' SLDs."""
    require(a.kind == "sld" and b.kind == "sld", f"sld_tensor needs two sld vectors, got {a.kind} and {b.kind}")
    n = a.n + b.n
    if a.exact and b.exact:
        values = [Fraction(0)] * (n + 1)
        for i, x in enumerate(a.values):
            for j, y in enumerate(b.values):
                values[i + j] += x * y
        return EnumeratorVector(n, "sld", tuple(values), EXACT)
    return EnumeratorVector(n, "sld", tuple(np.convolve(a.as_array(), b.as_array())), FLOAT)


def product_sld(n: int) -> EnumeratorVector:
    return EnumeratorVector(n, "sld", tuple(Fraction(c, 2**n) for c in binomial_row(n)), EXACT)


def _ghz_sld(e: int) -> EnumeratorVector:
    values = [Fraction(c, 2**e) if i % 2 == 0 else Fraction(0) for i, c in enumerate(binomial_row(e))]
    values[e] += Fraction(1, 2)
    return EnumeratorVector(e, "sld", tuple(values), EXACT)


def _pad(core: EnumeratorVector, n: int) -> EnumeratorVector:
    return core if core.n == n else sld_tensor(core, product_sld(n - core.n))


def dicke_apd(n: int, e: int) -> EnumeratorVector:
    # Schmidt coefficients of a size-i cut are C(i,j) C(n-i,e-j) / C(n,e)
    total = math.comb(n, e)
    values = []
    for i in range(n + 1):
        purity = sum(Fraction(math.comb(i, j) * math.comb(n - i, e - j), total) ** 2 for j in range(min(i, e) + 1))
        values.append(purity)
    return EnumeratorVector(n, "apd", tuple(values), EXACT)


def _superposition_apd(n: int, p: Fraction, coherent: bool) -> EnumeratorVector:
    mixed = 1 - 2 * p * (1 - p)
    values = [Fraction(1)] + [mixed] * (n - 1) + [Fraction(1) if coherent else mixed]
    return EnumeratorVector(n, "apd", tuple(values), EXACT)


def _two_design_sld(n: int) -> EnumeratorVector:
    scale = 2**n * (2**n + 1)
    values = [Fraction(1, 2**n)] + [Fraction(3**i * c, scale) for i, c in enumerate(binomial_row(n)) if i > 0]
    return EnumeratorVector(n, "sld", tuple(values), EXACT)


def _maximally_mixed_tpd(n: int) -> EnumeratorVector:
    return EnumeratorVector(n, "tpd", tuple(Fraction(c * 3**i, 4**n) for i, c in enumerate(binomial_row(n))), EXACT)


def family_enumerators(family: StateFamily) -> EnumeratorVector:
    """The analytically known enumerator of a family, exact.

    SLD for most families, APD for Dicke states and TPD for the maximally mixed state.
    """
    n = family.n
    if family.tag == "product_zero":
        return product_sld(n)
    if family.tag == "ghz":
        return _pad(_ghz_sld(family.e), n)
    if family.tag == "dicke":
        return dicke_apd(n, family.e)
    if family.tag == "superposition":
        return convert(_superposition_apd(n, family.p, True), "sld")
    if family.tag == "mixture":
        return convert(_superposition_apd(n, family.p, False), "sld")
    if family.tag == "two_design_average":
        return _two_design_sld(n)
    if family.tag == "maximally_mixed":
        return _maximally_mixed_tpd(n)
    if family.tag == "bell_pairs":
        pair = EnumeratorVector(2, "sld", (Fraction(1, 4), Fraction(0), Fraction(3, 4)), EXACT)
        return reduce(sld_tensor, [pair] * (n // 2))
    # remaining graph states: count stabilizer weights
    return code_enumerators(build_family_state(family)).sld()


def family_sld(family: StateFamily) -> EnumeratorVector:
    return convert(family_enumerators(family), "sld")


def prep_circuit(family: StateFamily) -> list:
    """Clifford circuit preparing a stabilizer family from |0...0>."""
    n = family.n
    if family.tag == "product_zero":
        return []
    if family.tag == "bell_pairs":
        circuit = []
        for k in range(0, n, 2):
            circuit += [("H", k), ("CNOT", k, k + 1)]
        return circuit
    if family.tag == "ghz":
        return [("H", 0)] + [("CNOT", 0, q) for q in range(1, family.e)]
    if family.tag == "line_graph":
        return [("H", q) for q in range(n)] + [("CZ", q, q + 1) for q in range(n - 1)]
    if family.tag == "cycle_graph":
        ring = [("CZ", q, (q + 1) % family.e) for q in range(family.e)]
        return [("H", q) for q in range(n)] + ring
    if family.tag == "ame6":
        return [("H", q) for q in range(6)] + [("CZ", a, b) for a, b in AME6_EDGES]
    raise ContractViolation(f"{family.label} has no Clifford preparation circuit")


def build_family_state(family: StateFamily):
    """StabilizerGroup for stabilizer families, DenseState otherwise."""
    if family.is_stabilizer:
        return StabilizerGroup.from_circuit(family.n, prep_circuit(family), family.label)
    return dense_family_state(family)


def _apply_gate(vector: np.ndarray, n: int, gate) -> np.ndarray:
    name, *qubits = gate
    t = vector.reshape((2,) * n)
    if name in ("H", "S", "X", "Y", "Z", "I"):
        matrix = {
            "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
            "S": np.diag([1, 1j]),
            "X": PAULIS[1],
            "Y": PAULIS[2],
            "Z": PAULIS[3],
            "I": PAULIS[0],
        }[name]
        t = np.moveaxis(np.tensordot(matrix, t, axes=([1], [qubits[0]])), 0, qubits[0])
        return t.reshape(-1)
    a, b = qubits
    t = t.copy()
    index = [slice(None)] * n
    index[a] = 1
    if name in ("CNOT", "CX"):
        target_axis = b if b < a else b - 1
        t[tuple(index)] = np.flip(t[tuple(index)], axis=target_axis)
    else:
        index[b] = 1
        t[tuple(index)] *= -1
    return t.reshape(-1)


def circuit_statevector(n: int, circuit) -> np.ndarray:
    validate_circuit(circuit, n)
    vector = np.zeros(2**n, dtype=complex)
    vector[0] = 1.0
    for gate in circuit:
        vector = _apply_gate(vector, n, gate)
    return vector


def dense_family_state(family: StateFamily) -> DenseState:
    """Dense density matrix of a family (n within the dense limit)."""
    n = family.n
    if family.is_stabilizer:
        return DenseState.pure(circuit_statevector(n, prep_circuit(family)))
    if family.tag == "dicke":
        return DenseState.pure(dicke_vector(n, family.e))
    if family.tag in ("superposition", "mixture"):
        p = float(family.p)
        zeros, ones = basis_state(n, [0] * n), basis_state(n, [1] * n)
        if family.tag == "superposition":
            return DenseState.pure(np.sqrt(p) * zeros + np.sqrt(1 - p) * ones)
        return DenseState.from_matrix(p * np.outer(zeros, zeros) + (1 - p) * np.outer(ones, ones))
    if family.tag == "maximally_mixed":
        return DenseState(n, np.eye(2**n) / 2**n)
    raise ContractViolation(f"{family.label} is an ensemble average, not a single state")
