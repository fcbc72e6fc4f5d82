"""Entanglement criteria, code distance and TPD structure read off enumerator vectors."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from modules.enumerators import EnumeratorVector
from modules.errors import ContractViolation, require
from modules.transforms import convert

logger = logging.getLogger(__name__)

TOLERANCE = 1e-9
CONSISTENCY_TOLERANCE = 1e-6
PURE_TOLERANCE = 1e-6

# n -> (label, sld index, bound) sufficient for genuine multipartite entanglement
GME_BOUNDS = {3: ("a_3 > 3/8", 3, 3 / 8), 4: ("a_3 > 7/16", 3, 7 / 16)}


@dataclass
class CriteriaReport:
    n: int
    n_body_margin: float
    purity_margin: float
    concurrence_lower_bound: float
    n_tangle: float
    n_tangle_valid: bool
    uniformity: int
    purity: float
    verdicts: dict
    tolerances: dict
    gme: dict = field(default_factory=dict)
    provenance: str = "exact"

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _complete(sld=None, apd=None, tpd=None) -> dict:
    given = {k: v for k, v in (("sld", sld), ("apd", apd), ("tpd", tpd)) if v is not None}
    require(given, "criteria need at least one of sld, apd, tpd")
    for kind, vec in given.items():
        require(vec.kind == kind, f"expected a {kind} vector, got {vec.kind}")
    source = next(iter(given.values()))
    require(all(v.n == source.n for v in given.values()), "vectors differ in qubit count")
    vectors = dict(given)
    for kind in ("sld", "apd", "tpd"):
        if kind not in vectors:
            vectors[kind] = convert(source, kind)
    return vectors


def check_consistency(sld: EnumeratorVector, apd: EnumeratorVector, tpd: EnumeratorVector,
                      tolerance: float = CONSISTENCY_TOLERANCE):
    """Raise when the three vectors are not images of each other."""
    for label, target, given in (("apd = T'.sld", "apd", apd), ("tpd = T~.sld", "tpd", tpd)):
        expected = convert(sld, target).as_array()
        deviation = float(np.max(np.abs(expected - given.as_array())))
        if deviation > tolerance:
            raise ContractViolation(f"inconsistent vectors: {label} fails by {deviation:.3g}")


def criterion_margins(n: int, sld: np.ndarray, apd: np.ndarray, tpd: np.ndarray, purity) -> dict:
    return {
        "n_body": sld[..., n] - 2.0**-n,
        "purity": apd[..., n] - apd[..., n - 1],
        "concurrence": 2.0**-n + (1.0 - 2.0**-n) * purity - tpd[..., n],
    }


def uniformity(sld: EnumeratorVector, tolerance: float = TOLERANCE) -> int:
    """Largest m with a_1 = ... = a_m = 0 within tolerance."""
    values = np.abs(sld.as_array())
    m = 0
    while m < sld.n and values[m + 1] <= tolerance:
        m += 1
    return m


def criteria_report(sld: EnumeratorVector = None, apd: EnumeratorVector = None, tpd: EnumeratorVector = None,
                    purity: float = None, tolerance: float = TOLERANCE, margin_tolerances: dict = None,
                    provenance: str = "exact") -> CriteriaReport:
    """Margins and verdicts of the QWE entanglement criteria.

    Missing vectors are completed by transforms; given ones are checked for consistency.
    """
    given = sum(v is not None for v in (sld, apd, tpd))
    vectors = _complete(sld, apd, tpd)
    if given > 1:
        check_consistency(vectors["sld"], vectors["apd"], vectors["tpd"])
    n = vectors["sld"].n
    a, a_prime, a_tilde = (vectors[k].as_array() for k in ("sld", "apd", "tpd"))
    purity = float(a.sum()) if purity is None else float(purity)

    margins = criterion_margins(n, a, a_prime, a_tilde, purity)
    tolerances = {k: tolerance for k in margins}
    tolerances.update(margin_tolerances or {})
    verdicts = {k: bool(margins[k] > tolerances[k]) for k in margins}

    gme = {}
    if n in GME_BOUNDS:
        label, index, bound = GME_BOUNDS[n]
        gme[label] = bool(a[index] - bound > tolerances.get("gme", tolerance))

    n_tangle_valid = purity >= 1 - PURE_TOLERANCE
    if not n_tangle_valid:
        logger.debug(f"n-tangle reported for an impure state (purity {purity:.6f})")
    return CriteriaReport(
        n=n,
        n_body_margin=float(margins["n_body"]),
        purity_margin=float(margins["purity"]),
        concurrence_lower_bound=float(margins["concurrence"]),
        n_tangle=float(2**n * a_tilde[0]),
        n_tangle_valid=n_tangle_valid,
        uniformity=uniformity(vectors["sld"], tolerance),
        purity=purity,
        verdicts=verdicts,
        tolerances=tolerances,
        gme=gme,
        provenance=provenance,
    )


def criteria_from_estimate(report, sigmas: float = 3.0) -> CriteriaReport:
    """Criteria on estimated vectors; a verdict needs its margin above `sigmas` bootstrap errors."""
    n = report.n
    tolerances = {}
    if report.margin_stderr:
        tolerances = {k: sigmas * float(v) for k, v in report.margin_stderr.items()}
        if n in GME_BOUNDS and "sld" in report.stderr:
            tolerances["gme"] = sigmas * float(report.stderr["sld"][GME_BOUNDS[n][1]])
    else:
        logger.warning("No bootstrap errors in the report; verdicts use the exact-input tolerance")
    return criteria_report(
        sld=report.vectors["sld"],
        purity=report.purity,
        margin_tolerances=tolerances,
        provenance="estimated",
    )


@dataclass(frozen=True)
class DistanceResult:
    distance: int
    is_code: bool
    note: str = ""

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _first_gap(A, B, n: int) -> int:
    for i in range(1, n + 1):
        if A[i] < B[i]:
            return i
    return None


def code_distance(enums) -> DistanceResult:
    """Smallest i > 0 with A_i < B_i; n + 1 with a flag when no logical operator exists."""
    n, k = enums.n, enums.k
    require(sum(enums.A) == 2 ** (n - k), f"A sums to {sum(enums.A)}, expected 2^{n - k}")
    require(sum(enums.B) == 2 ** (n + k), f"B sums to {sum(enums.B)}, expected 2^{n + k}")
    d = _first_gap(enums.A, enums.B, n)
    if d is None:
        return DistanceResult(n + 1, False, "state, not code: no logical operators")
    return DistanceResult(d, True)


def code_distance_from_estimates(sld: EnumeratorVector, dual_sld: EnumeratorVector, k: int) -> DistanceResult:
    """Distance rule on estimated vectors, comparing rounded unnormalized counts."""
    require(sld.kind == "sld" and dual_sld.kind == "dual_sld", "need sld and dual_sld vectors")
    n = sld.n
    A = np.rint(sld.as_array() * 2**n).astype(np.int64)
    B = np.rint(dual_sld.as_array() * 2 ** (n + k)).astype(np.int64)
    d = _first_gap(A, B, n)
    if d is None:
        return DistanceResult(n + 1, False, "no weight separates normalizer from stabilizer counts")
    return DistanceResult(d, True)


def _moments(tpd: EnumeratorVector) -> tuple:
    values = tpd.as_array()
    x = np.arange(tpd.n + 1, dtype=float)
    return float(values @ x), float(values @ x**2), float(values @ x**3)


def tpd_moments(tpd: EnumeratorVector) -> dict:
    """Mean and variance of the triplet count and the low-weight unnormalized sector lengths."""
    require(tpd.kind == "tpd", f"expected a tpd vector, got {tpd.kind}")
    n = tpd.n
    m1, m2, m3 = _moments(tpd)
    A1 = 4 * m1 - 3 * n
    A2 = 8 * m2 - (12 * n - 4) * m1 + 9 * math.comb(n, 2)
    A3 = 32 / 3 * m3 - (24 * n - 16) * m2 + (54 * n * n - 90 * n + 28) / 3 * m1 - 27 * math.comb(n, 3)
    variance = m2 - m1 * m1
    via_sld = (2 * A2 - A1 * A1 - 2 * A1 + 3 * n) / 16
    return {
        "mean": m1,
        "variance": variance,
        "variance_via_sld": via_sld,
        "consistent": bool(abs(variance - via_sld) <= 1e-9 * max(1.0, n * n)),
        "A1": A1,
        "A2": A2,
        "A3": A3,
    }


@dataclass(frozen=True)
class Violation:
    name: str
    detail: str

    def to_json(self) -> dict:
        return {"name": self.name, "detail": self.detail}


# SLD polygon of two-qubit states in (4 a_1, 4 a_2), counter-clockwise
TWO_QUBIT_POLYGON = ((0.0, 0.0), (1.0, 0.0), (2.0, 1.0), (0.0, 3.0))


def _in_polygon(point, polygon, tolerance: float) -> bool:
    for (x1, y1), (x2, y2) in zip(polygon, polygon[1:] + polygon[:1]):
        cross = (x2 - x1) * (point[1] - y1) - (y2 - y1) * (point[0] - x1)
        if cross < -tolerance:
            return False
    return True


def tpd_admissibility(tpd: EnumeratorVector, tolerance: float = TOLERANCE) -> list:
    """Known necessary conditions on physical TPDs; returns the violated ones."""
    require(tpd.kind == "tpd", f"expected a tpd vector, got {tpd.kind}")
    n = tpd.n
    values = tpd.as_array()
    moments = tpd_moments(tpd)
    violations = []

    def check(name, ok, detail):
        if not ok:
            violations.append(Violation(name, detail))

    check("mean_triplets", moments["mean"] >= 0.75 * n - tolerance,
          f"mean triplet count {moments['mean']:.6g} below 3n/4 = {0.75 * n}")
    check("all_singlet", values[0] <= 2.0**-n + tolerance, f"ã_0 = {values[0]:.6g} exceeds 2^-n")
    check("A1_range", -tolerance <= moments["A1"] <= n + tolerance, f"A1 = {moments['A1']:.6g} outside [0, {n}]")
    if n >= 3:
        upper = math.comb(n, 2)
        check("A2_range", -tolerance <= moments["A2"] <= upper + tolerance,
              f"A2 = {moments['A2']:.6g} outside [0, {upper}]")
    if n >= 5:
        upper = math.comb(n, 3)
        check("A3_range", -tolerance <= moments["A3"] <= upper + tolerance,
              f"A3 = {moments['A3']:.6g} outside [0, {upper}]")
    ssa = sum(math.comb(n - i, 2) * (2 * i + 2 - n) * values[i] for i in range(n + 1))
    check("ssa_linear", ssa >= -tolerance, f"sum C(n-i,2)(2i+2-n) ã_i = {ssa:.6g} is negative")

    sld = convert(tpd, "sld").as_array()
    full_body = 2**n * sld[n]
    bound = 2 ** (n - 1) + (1 if n % 2 == 0 else 0)
    check("full_body", full_body <= bound + tolerance * 2**n, f"A_n = {full_body:.6g} exceeds {bound}")
    if n == 2:
        point = (4 * sld[1], 4 * sld[2])
        check("two_qubit_polygon", _in_polygon(point, TWO_QUBIT_POLYGON, tolerance),
              f"(4a_1, 4a_2) = ({point[0]:.6g}, {point[1]:.6g}) outside the two-qubit polygon")
    for v in violations:
        logger.debug(f"Admissibility violation {v.name}: {v.detail}")
    return violations


def observable_norm(kind: str, i: int, n: int) -> float:
    """Operator norm of the two-copy observable behind enumerator entry i."""
    base = kind.replace("dual_", "")
    require(0 <= i <= n, f"index must lie in 0..{n}, got {i}")
    if base == "sld":
        return 3**i * math.comb(n, i) / 2**n
    if base in ("apd", "tpd"):
        return 1.0
    raise ContractViolation(f"unknown enumerator kind: {kind}")


def robustness_bound(kind: str, i: int, n: int, trace_distance: float) -> float:
    """Worst-case shift of enumerator entry i when the two-copy state moves by `trace_distance`."""
    require(trace_distance >= 0, f"trace distance must be non-negative, got {trace_distance}")
    return observable_norm(kind, i, n) * trace_distance
