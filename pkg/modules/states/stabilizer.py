"""Stabilizer groups, their weight enumerators and CSS encoders."""

import json
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from modules import configuration
from modules.enumerators import EXACT, EnumeratorVector
from modules.errors import ContractViolation, InputFileError, ResourceLimitError, require
from modules.states.symplectic import (
    gf2_nullspace,
    gf2_rank,
    gf2_row_echelon,
    gf2_solve,
    in_span,
    pack,
    pauli_from_string,
    pauli_to_string,
    symplectic_product,
    weight,
)
from modules.states.tableau import StabilizerTableau

logger = logging.getLogger(__name__)

# rows of the dense table enumerated at once when counting group elements
_CHUNK_LOG2 = 16


@dataclass(frozen=True, eq=False)
class StabilizerGroup:
    n: int
    generators: np.ndarray
    name: str = ""

    def __post_init__(self):
        require(isinstance(self.n, int) and self.n >= 1, f"qubit count must be a positive integer, got {self.n}")
        generators = np.atleast_2d(np.asarray(self.generators, dtype=np.uint8)).reshape(-1, 2 * self.n) % 2
        if generators.shape[0]:
            require(not np.any(symplectic_product(generators, generators)), "stabilizer generators do not commute")
            require(gf2_rank(generators) == generators.shape[0], "stabilizer generators are not independent")
        generators.setflags(write=False)
        object.__setattr__(self, "generators", generators)

    @property
    def k(self) -> int:
        return self.n - self.generators.shape[0]

    @property
    def is_css(self) -> bool:
        x, z = self.generators[:, : self.n], self.generators[:, self.n:]
        return bool(np.all(~(x.any(axis=1) & z.any(axis=1))))

    def x_checks(self) -> np.ndarray:
        x, z = self.generators[:, : self.n], self.generators[:, self.n:]
        return x[x.any(axis=1) & ~z.any(axis=1)]

    def z_checks(self) -> np.ndarray:
        x, z = self.generators[:, : self.n], self.generators[:, self.n:]
        return z[z.any(axis=1) & ~x.any(axis=1)]

    def _swapped(self) -> np.ndarray:
        # v commutes with g iff [g_z | g_x] . v = 0
        return np.concatenate([self.generators[:, self.n:], self.generators[:, : self.n]], axis=1)

    def normalizer(self) -> np.ndarray:
        """Basis of all Pauli strings commuting with every generator (n + k rows)."""
        if self.generators.shape[0] == 0:
            return np.eye(2 * self.n, dtype=np.uint8)
        return gf2_nullspace(self._swapped())

    def shadow_element(self) -> np.ndarray:
        """A Pauli anticommuting with each generator exactly when its weight is odd."""
        if self.generators.shape[0] == 0:
            return np.zeros(2 * self.n, dtype=np.uint8)
        parities = np.array([weight(g) % 2 for g in self.generators], dtype=np.uint8)
        return gf2_solve(self._swapped(), parities)

    @classmethod
    def from_strings(cls, labels, name: str = "") -> "StabilizerGroup":
        labels = list(labels)
        require(len(labels) > 0, "need at least one generator string")
        vecs = [pauli_from_string(label) for label in labels]
        n = vecs[0].size // 2
        require(all(v.size == 2 * n for v in vecs), "generator strings have different lengths")
        return cls(n, np.array(vecs), name)

    def to_strings(self) -> list:
        return [pauli_to_string(g) for g in self.generators]

    @classmethod
    def from_text(cls, text: str, source="<input>", name: str = "") -> "StabilizerGroup":
        labels, lines = [], []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                pauli_from_string(line)
            except ContractViolation as cv:
                raise InputFileError(source, str(cv), lineno) from cv
            labels.append(line)
            lines.append(lineno)
        if not labels:
            raise InputFileError(source, "no generators found")
        width = len(labels[0].lstrip("+-"))
        for label, lineno in zip(labels, lines):
            if len(label.lstrip("+-")) != width:
                raise InputFileError(source, f"generator has length {len(label)}, expected {width}", lineno)
        try:
            return cls.from_strings(labels, name)
        except ContractViolation as cv:
            raise InputFileError(source, str(cv)) from cv

    def to_text(self) -> str:
        header = f"# {self.name}\n" if self.name else ""
        return header + "\n".join(self.to_strings()) + "\n"

    def to_json(self) -> dict:
        x, z = pack(self.generators) if self.generators.shape[0] else (np.zeros(0), np.zeros(0))
        return {"n": self.n, "name": self.name, "x": [int(v) for v in x], "z": [int(v) for v in z]}

    @classmethod
    def from_json(cls, data: dict, source="<input>") -> "StabilizerGroup":
        try:
            n = int(data["n"])
            xs, zs = list(data["x"]), list(data["z"])
        except (KeyError, TypeError, ValueError) as e:
            raise InputFileError(source, f"stabilizer group is missing field {e}") from e
        if len(xs) != len(zs):
            raise InputFileError(source, "fields 'x' and 'z' have different lengths")
        rows = np.zeros((len(xs), 2 * n), dtype=np.uint8)
        for r, (xm, zm) in enumerate(zip(xs, zs)):
            for q in range(n):
                rows[r, q] = (int(xm) >> q) & 1
                rows[r, n + q] = (int(zm) >> q) & 1
        try:
            return cls(n, rows, data.get("name", ""))
        except ContractViolation as cv:
            raise InputFileError(source, str(cv)) from cv

    @classmethod
    def load(cls, path: str) -> "StabilizerGroup":
        logger.debug(f"Reading stabilizer group from {path}")
        with open(path, "r", encoding="utf-8") as f:
            content = f.read()
        if path.endswith(".json"):
            try:
                data = json.loads(content)
            except json.JSONDecodeError as je:
                raise InputFileError(path, f"invalid JSON ({je.msg})", je.lineno) from je
            return cls.from_json(data, path)
        return cls.from_text(content, path)

    @classmethod
    def from_circuit(cls, n: int, circuit, name: str = "") -> "StabilizerGroup":
        """Stabilizer group of circuit|0...0>, signs dropped."""
        tableau = StabilizerTableau(n).run(circuit)
        return cls(n, tableau.stabilizers(), name)


@dataclass(frozen=True)
class CodeEnumerators:
    n: int
    k: int
    A: tuple
    B: tuple
    A_shadow: tuple

    def sld(self) -> EnumeratorVector:
        return EnumeratorVector(self.n, "sld", tuple(Fraction(a, 2**self.n) for a in self.A), EXACT)

    def dual_sld(self) -> EnumeratorVector:
        return EnumeratorVector(self.n, "dual_sld", tuple(Fraction(b, 2 ** (self.n + self.k)) for b in self.B), EXACT)

    def tpd(self) -> EnumeratorVector:
        scale = 2 ** (self.n + self.k)
        return EnumeratorVector(self.n, "tpd", tuple(Fraction(a, scale) for a in self.A_shadow), EXACT)

    def to_json(self) -> dict:
        return {"n": self.n, "k": self.k, "A": list(self.A), "B": list(self.B), "A_shadow": list(self.A_shadow)}


def weight_counts(basis, offset=None, limit_log2: int = None) -> list:
    """Weight histogram of the span of `basis` (rows), shifted by `offset` if given."""
    basis = np.atleast_2d(np.asarray(basis, dtype=np.uint8))
    n = basis.shape[1] // 2
    m = basis.shape[0]
    limit_log2 = limit_log2 or configuration.active().getInt("Stabilizer", "max_enumeration_log2")
    if m > limit_log2:
        raise ResourceLimitError(f"refusing to enumerate 2^{m} group elements (limit 2^{limit_log2})")
    if offset is None:
        offset = np.zeros(2 * n, dtype=np.uint8)
    base_x, base_z = pack(offset)
    counts = np.zeros(n + 1, dtype=np.int64)
    if m == 0:
        counts[int(np.bitwise_count(base_x[0] | base_z[0]))] += 1
        return [int(c) for c in counts]

    xs, zs = pack(basis)
    low = min(m, _CHUNK_LOG2)
    # every combination of the first `low` rows, as one table
    table_x = np.zeros(1, dtype=np.uint64) ^ base_x[0]
    table_z = np.zeros(1, dtype=np.uint64) ^ base_z[0]
    for r in range(low):
        table_x = np.concatenate([table_x, table_x ^ xs[r]])
        table_z = np.concatenate([table_z, table_z ^ zs[r]])

    high = m - low
    logger.debug(f"Counting 2^{m} elements in {2 ** high} chunks of {table_x.size}")
    shift_x, shift_z = np.uint64(0), np.uint64(0)
    for step in range(2**high):
        if step:
            # Gray code: one high row toggles per step
            bit = (step & -step).bit_length() - 1
            shift_x ^= xs[low + bit]
            shift_z ^= zs[low + bit]
        weights = np.bitwise_count((table_x ^ shift_x) | (table_z ^ shift_z))
        counts += np.bincount(weights, minlength=n + 1)[: n + 1]
    return [int(c) for c in counts]


def code_enumerators(group: StabilizerGroup) -> CodeEnumerators:
    """Stabilizer, normalizer and shadow weight counts of a group."""
    logger.debug(f"Enumerating {group.name or 'group'} (n={group.n}, k={group.k})")
    A = weight_counts(group.generators) if group.generators.shape[0] else [1] + [0] * group.n
    normalizer = group.normalizer()
    B = weight_counts(normalizer)
    shadow = group.shadow_element()
    A_shadow = B if not np.any(shadow) else weight_counts(normalizer, offset=shadow)
    return CodeEnumerators(n=group.n, k=group.k, A=tuple(A), B=tuple(B), A_shadow=tuple(A_shadow))


def css_zero_circuit(code: StabilizerGroup) -> list:
    """Clifford circuit preparing |0...0>_L of a CSS code from |0...0>."""
    require(code.is_css, f"{code.name or 'code'} is not a CSS code")
    h_x = code.x_checks()
    circuit = []
    if h_x.shape[0] == 0:
        return circuit
    reduced, pivots = gf2_row_echelon(h_x)
    for row, pivot in enumerate(pivots):
        circuit.append(("H", pivot))
        for target in np.nonzero(reduced[row])[0]:
            if int(target) != pivot:
                circuit.append(("CNOT", pivot, int(target)))
    return circuit


def logical_x_operators(code: StabilizerGroup) -> np.ndarray:
    """k independent X-type logical operators (x-bit rows) of a CSS code."""
    require(code.is_css, f"{code.name or 'code'} is not a CSS code")
    h_x, h_z = code.x_checks(), code.z_checks()
    candidates = gf2_nullspace(h_z) if h_z.shape[0] else np.eye(code.n, dtype=np.uint8)
    chosen = [row for row in h_x]
    logicals = []
    for vec in candidates:
        if not in_span(np.array(chosen, dtype=np.uint8).reshape(-1, code.n), vec):
            logicals.append(vec)
            chosen.append(vec)
        if len(logicals) == code.k:
            break
    if len(logicals) != code.k:
        raise ContractViolation(f"found {len(logicals)} logical X operators, expected {code.k}")
    return np.array(logicals, dtype=np.uint8).reshape(-1, code.n)


def _steane() -> StabilizerGroup:
    supports = [(3, 4, 5, 6), (1, 2, 5, 6), (0, 2, 4, 6)]
    labels = []
    for letter in "XZ":
        for support in supports:
            labels.append("".join(letter if q in support else "I" for q in range(7)))
    return StabilizerGroup.from_strings(labels, "steane")


BUILTIN_CODES = {
    "steane": _steane,
    "five-qubit": lambda: StabilizerGroup.from_strings(["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"], "five-qubit"),
    "zz-check": lambda: StabilizerGroup.from_strings(["ZZ"], "zz-check"),
}


def builtin_code(name: str) -> StabilizerGroup:
    if name not in BUILTIN_CODES:
        raise ContractViolation(f"unknown built-in code {name!r}; known: {', '.join(BUILTIN_CODES)}")
    return BUILTIN_CODES[name]()
