"""The nine linear maps between enumerator vectors.

MacWilliams maps M, M', M~ act inside the SLD, APD and TPD bases; T', T~ and T~'
change basis. Every matrix is generated as an integer lattice with one denominator
per row, so exact and float matrices come from the same O(n^2) recurrences.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property

import numpy as np
import pandas as pd

from modules import configuration
from modules.enumerators import EXACT, FLOAT, EnumeratorVector
from modules.errors import ContractViolation, ConvergenceError, PrecisionError, require
from modules.utils import binomial_row, format_scalar

logger = logging.getLogger(__name__)


class TransformKind(str, Enum):
    M = "M"
    M_prime = "M_prime"
    M_tilde = "M_tilde"
    T_prime = "T_prime"
    T_prime_inv = "T_prime_inv"
    T_tilde = "T_tilde"
    T_tilde_inv = "T_tilde_inv"
    T_tilde_prime = "T_tilde_prime"
    T_tilde_prime_inv = "T_tilde_prime_inv"

    def target_kind(self, source: str) -> str:
        if source not in KIND_MAP[self]:
            raise ContractViolation(f"{self.value} does not act on {source} vectors")
        return KIND_MAP[self][source]


KIND_MAP = {
    TransformKind.M: {"sld": "dual_sld", "dual_sld": "sld"},
    TransformKind.M_prime: {"apd": "dual_apd", "dual_apd": "apd"},
    TransformKind.M_tilde: {"tpd": "dual_tpd", "dual_tpd": "tpd"},
    TransformKind.T_prime: {"sld": "apd", "dual_sld": "dual_apd"},
    TransformKind.T_prime_inv: {"apd": "sld", "dual_apd": "dual_sld"},
    TransformKind.T_tilde: {"sld": "tpd", "dual_sld": "dual_tpd"},
    TransformKind.T_tilde_inv: {"tpd": "sld", "dual_tpd": "dual_sld"},
    TransformKind.T_tilde_prime: {"apd": "tpd", "dual_apd": "dual_tpd"},
    TransformKind.T_tilde_prime_inv: {"tpd": "apd", "dual_tpd": "dual_apd"},
}

# exponentially growing operator norms
AMPLIFYING = {
    TransformKind.M,
    TransformKind.T_prime,
    TransformKind.T_prime_inv,
    TransformKind.T_tilde,
    TransformKind.T_tilde_inv,
    TransformKind.T_tilde_prime,
}

_warned = set()


@dataclass(frozen=True, eq=False)
class TransformMatrix:
    n: int
    kind: TransformKind
    precision: str
    numerators: tuple
    denominators: tuple

    @cached_property
    def exact_entries(self) -> np.ndarray:
        entries = np.empty((self.n + 1, self.n + 1), dtype=object)
        for i, (row, den) in enumerate(zip(self.numerators, self.denominators)):
            for j, num in enumerate(row):
                entries[i, j] = Fraction(num, den)
        entries.setflags(write=False)
        return entries

    @cached_property
    def float_entries(self) -> np.ndarray:
        entries = np.empty((self.n + 1, self.n + 1), dtype=float)
        try:
            for i, (row, den) in enumerate(zip(self.numerators, self.denominators)):
                entries[i] = [num / den for num in row]
        except OverflowError as oe:
            raise PrecisionError(f"{self.kind.value} entries overflow float64 at n={self.n}") from oe
        if not np.all(np.isfinite(entries)):
            raise PrecisionError(f"{self.kind.value} entries overflow float64 at n={self.n}")
        entries.setflags(write=False)
        return entries

    @property
    def entries(self) -> np.ndarray:
        return self.exact_entries if self.precision == EXACT else self.float_entries

    def to_json(self) -> dict:
        rows = [[format_scalar(v) for v in row] for row in self.exact_entries]
        return {"n": self.n, "kind": self.kind.value, "precision": self.precision, "rows": rows}


def _macwilliams_lattice(n: int) -> list:
    # 2^n * M: first row ones, last column (-1)^i C(n,i)
    binomials = binomial_row(n)
    lattice = [[0] * (n + 1) for _ in range(n + 1)]
    lattice[0] = [1] * (n + 1)
    for i in range(n + 1):
        lattice[i][n] = -binomials[i] if i % 2 else binomials[i]
    for i in range(1, n + 1):
        row, prev = lattice[i], lattice[i - 1]
        for j in range(n - 1, -1, -1):
            row[j] = 3 * prev[j + 1] + prev[j] + row[j + 1]
    return lattice


def _krawtchouk_lattice(n: int) -> list:
    # C(n,i) * T~'^{-1}: first row ones, first column (-1)^i C(n,i),
    # each 2x2 block's lower-right entry is the sum of the other three
    binomials = binomial_row(n)
    lattice = [[0] * (n + 1) for _ in range(n + 1)]
    lattice[0] = [1] * (n + 1)
    for i in range(1, n + 1):
        row, prev = lattice[i], lattice[i - 1]
        row[0] = -binomials[i] if i % 2 else binomials[i]
        for j in range(1, n + 1):
            row[j] = prev[j - 1] + prev[j] + row[j - 1]
    return lattice


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


def _lattice(kind: TransformKind, n: int) -> tuple:
    size = n + 1
    power = 2**n
    binomials = binomial_row(n)
    if kind == TransformKind.M:
        return _macwilliams_lattice(n), [power] * size
    if kind == TransformKind.T_tilde:
        lattice = _macwilliams_lattice(n)
        return [[_sign(j) * v for j, v in enumerate(row)] for row in lattice], [power] * size
    if kind == TransformKind.T_tilde_inv:
        lattice = _macwilliams_lattice(n)
        return [[_sign(i) * v for v in row] for i, row in enumerate(lattice)], [power] * size
    if kind == TransformKind.M_prime:
        return [[int(j == n - i) for j in range(size)] for i in range(size)], [1] * size
    if kind == TransformKind.M_tilde:
        return [[_sign(n + i) if i == j else 0 for j in range(size)] for i in range(size)], [1] * size
    if kind == TransformKind.T_prime:
        rows = [[2 ** (n - i) * math.comb(n - j, n - i) for j in range(size)] for i in range(size)]
        return rows, binomials
    if kind == TransformKind.T_prime_inv:
        rows = [
            [_sign(i + j) * binomials[j] * 2**j * math.comb(n - j, n - i) for j in range(size)]
            for i in range(size)
        ]
        return rows, [power] * size
    if kind == TransformKind.T_tilde_prime_inv:
        return _krawtchouk_lattice(n), binomials
    if kind == TransformKind.T_tilde_prime:
        lattice = _krawtchouk_lattice(n)
        rows = [[_sign(i + j) * binomials[j] * v for j, v in enumerate(row)] for i, row in enumerate(lattice)]
        return rows, [power] * size
    raise ContractViolation(f"unknown transform kind: {kind}")


def integer_lattice(kind, n: int) -> tuple:
    """Integer rows and per-row denominators of a transform (entry = row[j] / denominator)."""
    return _lattice(TransformKind(kind), n)


def closed_form_entry(kind: TransformKind, n: int, i: int, j: int) -> Fraction:
    """Entry (i, j) evaluated from its defining binomial sum."""
    kind = TransformKind(kind)
    comb = math.comb

    def kraw(weight_i, weight_j, x, y):
        # sum_l C(n-j, i-l) C(j, l) x^(i-l) y^l
        return sum(
            comb(n - weight_j, weight_i - l) * comb(weight_j, l) * x ** (weight_i - l) * y**l
            for l in range(weight_i + 1)
        )

    if kind == TransformKind.M:
        return Fraction(kraw(i, j, 3, -1), 2**n)
    if kind == TransformKind.M_prime:
        return Fraction(int(i == n - j))
    if kind == TransformKind.M_tilde:
        return Fraction(_sign(n + i) if i == j else 0)
    if kind == TransformKind.T_prime:
        return Fraction(2 ** (n - i) * comb(n - j, n - i), comb(n, i))
    if kind == TransformKind.T_prime_inv:
        return Fraction(comb(n, j) * comb(n - j, n - i) * _sign(i + j), 2 ** (n - j))
    if kind == TransformKind.T_tilde:
        return Fraction(_sign(j) * kraw(i, j, 3, -1), 2**n)
    if kind == TransformKind.T_tilde_inv:
        return Fraction(kraw(i, j, -3, 1), 2**n)
    if kind == TransformKind.T_tilde_prime:
        return Fraction(comb(n, j) * _sign(j) * kraw(i, j, 1, -1), 2**n)
    if kind == TransformKind.T_tilde_prime_inv:
        return Fraction(kraw(i, j, -1, 1), comb(n, i))
    raise ContractViolation(f"unknown transform kind: {kind}")


def build_transform(kind, n: int, precision: str = EXACT, method: str = "recurrence") -> TransformMatrix:
    """Build one of the nine transforms for n qubits.

    Args:
        kind (TransformKind | str): which map.
        n (int): qubit count, at least 1.
        precision (str): "exact" (rational entries) or "float64".
        method (str): "recurrence" (O(n^2) lattice) or "closed_form" (binomial sums).

    Raises:
        ContractViolation: unknown kind or n < 1.
        PrecisionError: float mode beyond the configured limit or on overflow.
    """
    try:
        kind = TransformKind(kind)
    except ValueError as ve:
        raise ContractViolation(f"unknown transform kind: {kind}") from ve
    require(isinstance(n, int) and n >= 1, f"qubit count must be a positive integer, got {n}")
    require(precision in (EXACT, FLOAT), f"unknown precision: {precision}")
    if precision == FLOAT:
        limit = configuration.active().getInt("Precision", "float_limit")
        if n > limit:
            raise PrecisionError(f"float mode is limited to n <= {limit}, got n={n}")
        if kind in AMPLIFYING and kind not in _warned:
            _warned.add(kind)
            logger.warning(f"{kind.value} has an exponentially growing norm; float mode amplifies rounding errors")

    logger.debug(f"Building {kind.value} for n={n} ({precision}, {method})")
    if method == "recurrence":
        rows, denominators = _lattice(kind, n)
    elif method == "closed_form":
        rows, denominators = [], []
        for i in range(n + 1):
            row = [closed_form_entry(kind, n, i, j) for j in range(n + 1)]
            nums, den = _row_over_common(row)
            rows.append(nums)
            denominators.append(den)
    else:
        raise ContractViolation(f"unknown construction method: {method}")

    matrix = TransformMatrix(
        n=n,
        kind=kind,
        precision=precision,
        numerators=tuple(tuple(row) for row in rows),
        denominators=tuple(denominators),
    )
    if precision == FLOAT:
        matrix.float_entries  # fail early on overflow
    return matrix


def _row_over_common(row) -> tuple:
    den = 1
    for v in row:
        den = math.lcm(den, v.denominator)
    return [v.numerator * (den // v.denominator) for v in row], den


def apply_transform(matrix: TransformMatrix, vec: EnumeratorVector) -> EnumeratorVector:
    """matrix . vec, tagged with the target kind.

    Exact matrices applied to exact vectors stay rational.
    """
    require(matrix.n == vec.n, f"matrix is for n={matrix.n}, vector has n={vec.n}")
    target = matrix.kind.target_kind(vec.kind)
    n = vec.n

    if matrix.kind == TransformKind.M_prime:
        return EnumeratorVector(n, target, tuple(reversed(vec.values)), vec.precision)
    if matrix.kind == TransformKind.M_tilde:
        values = tuple(_sign(n + i) * v for i, v in enumerate(vec.values))
        return EnumeratorVector(n, target, values, vec.precision)

    if matrix.precision == EXACT and vec.exact:
        numerators, denominator = _row_over_common([Fraction(v) for v in vec.values])
        values = tuple(
            Fraction(sum(a * c for a, c in zip(row, numerators)), den * denominator)
            for row, den in zip(matrix.numerators, matrix.denominators)
        )
        return EnumeratorVector(n, target, values, EXACT)

    result = matrix.float_entries @ vec.as_array()
    return EnumeratorVector(n, target, tuple(result), FLOAT)


# shortest chain of maps between the three bases
_CHAINS = {
    ("sld", "apd"): TransformKind.T_prime,
    ("apd", "sld"): TransformKind.T_prime_inv,
    ("sld", "tpd"): TransformKind.T_tilde,
    ("tpd", "sld"): TransformKind.T_tilde_inv,
    ("apd", "tpd"): TransformKind.T_tilde_prime,
    ("tpd", "apd"): TransformKind.T_tilde_prime_inv,
    ("sld", "dual_sld"): TransformKind.M,
    ("apd", "dual_apd"): TransformKind.M_prime,
    ("tpd", "dual_tpd"): TransformKind.M_tilde,
}


def convert(vec: EnumeratorVector, target: str, precision: str = None) -> EnumeratorVector:
    """Express `vec` as an enumerator of kind `target`.

    Goes through the SLD basis when no single map links the two kinds.
    """
    if vec.kind == target:
        return vec
    precision = precision or vec.precision
    key = (vec.kind, target)
    if key in _CHAINS:
        return apply_transform(build_transform(_CHAINS[key], vec.n, precision), vec)
    reverse = (target, vec.kind)
    if reverse in _CHAINS and _CHAINS[reverse] in (TransformKind.M, TransformKind.M_prime, TransformKind.M_tilde):
        return apply_transform(build_transform(_CHAINS[reverse], vec.n, precision), vec)
    base = vec.kind.replace("dual_", "")
    if vec.kind.startswith("dual_"):
        primal = convert(vec, base, precision)
        return convert(primal, target, precision)
    if target.startswith("dual_"):
        return convert(convert(vec, target.replace("dual_", ""), precision), target, precision)
    raise ContractViolation(f"no transform from {vec.kind} to {target}")


def transform_between(source: str, target: str, n: int, precision: str = EXACT):
    """The single map sending `source` vectors to `target` vectors, None for equal kinds."""
    if source == target:
        return None
    if (source, target) in _CHAINS:
        return build_transform(_CHAINS[(source, target)], n, precision)
    if (target, source) in _CHAINS and _CHAINS[(target, source)] in (
        TransformKind.M, TransformKind.M_prime, TransformKind.M_tilde
    ):
        return build_transform(_CHAINS[(target, source)], n, precision)
    raise ContractViolation(f"no single transform from {source} to {target}")


def round_trip_residual(vec: EnumeratorVector, target: str) -> float:
    """max |vec - back(forward(vec))|, the identity check reported next to a conversion."""
    back = convert(convert(vec, target), vec.kind, vec.precision)
    return float(np.max(np.abs(back.as_array() - vec.as_array())))


def matrix_frame(matrix: TransformMatrix):
    """Float entries as a DataFrame indexed by row i, columns by j."""
    return pd.DataFrame(matrix.float_entries, index=pd.RangeIndex(matrix.n + 1, name="i"),
                        columns=[str(j) for j in range(matrix.n + 1)])


def _scaled(matrix) -> tuple:
    numerators = np.array(matrix.numerators, dtype=object)
    return numerators, list(matrix.denominators)


def multiply(*matrices) -> np.ndarray:
    """Product of transform matrices, exact when every factor is exact."""
    require(len(matrices) > 0, "multiply needs at least one matrix")
    n = matrices[0].n
    require(all(m.n == n for m in matrices), "matrix sizes differ")
    if any(m.precision == FLOAT for m in matrices):
        result = matrices[0].float_entries
        for m in matrices[1:]:
            result = result @ m.float_entries
        return result

    acc, acc_dens = _scaled(matrices[0])
    for m in matrices[1:]:
        nums, dens = _scaled(m)
        common = 1
        for d in dens:
            common = math.lcm(common, d)
        factors = np.array([common // d for d in dens], dtype=object)
        acc = acc.dot(nums * factors[:, None])
        acc_dens = [d * common for d in acc_dens]
    product = np.empty(acc.shape, dtype=object)
    for i in range(acc.shape[0]):
        for j in range(acc.shape[1]):
            product[i, j] = Fraction(acc[i, j], acc_dens[i])
    return product


def identity_matrix(n: int, precision: str = EXACT) -> np.ndarray:
    if precision == FLOAT:
        return np.eye(n + 1)
    identity = np.full((n + 1, n + 1), Fraction(0), dtype=object)
    for i in range(n + 1):
        identity[i, i] = Fraction(1)
    return identity


def operator_norm(matrix: TransformMatrix, tolerance: float = None, max_iterations: int = None) -> float:
    """Largest singular value of the matrix (induced 2-norm).

    Repeatedly squares the normalized Gram matrix and reads the Rayleigh quotient off its
    dominant column.

    Raises:
        PrecisionError: entries are not float-representable.
        ConvergenceError: no convergence within `max_iterations` squarings.
    """
    conf = configuration.active()
    tolerance = tolerance or conf.getFloat("Norm", "tolerance")
    max_iterations = max_iterations or conf.getInt("Norm", "max_iterations")

    a = np.array(matrix.float_entries, dtype=float)
    scale = np.abs(a).max()
    if scale == 0.0:
        return 0.0
    a = a / scale
    gram = a.T @ a
    power = gram / np.linalg.norm(gram)
    previous = None
    for iteration in range(max_iterations):
        power = power @ power
        power /= np.linalg.norm(power)
        column = power[:, np.argmax(np.linalg.norm(power, axis=0))]
        rayleigh = float(column @ gram @ column) / float(column @ column)
        sigma = math.sqrt(max(rayleigh, 0.0))
        if previous is not None and abs(sigma - previous) <= tolerance * sigma:
            logger.debug(f"Norm of {matrix.kind.value} (n={matrix.n}) converged after {iteration + 1} squarings")
            return sigma * scale
        previous = sigma
    raise ConvergenceError(
        f"operator norm of {matrix.kind.value} (n={matrix.n}) did not converge in {max_iterations} iterations"
    )
