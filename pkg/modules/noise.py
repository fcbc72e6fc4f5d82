"""Local depolarizing noise on enumerators and entanglement-criterion thresholds."""

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import pandas as pd

from modules import configuration
from modules.enumerators import EnumeratorVector
from modules.errors import ContractViolation, require
from modules.states.families import StateFamily, build_family_state, family_sld
from modules.states.symplectic import gf2_rank
from modules.transforms import convert
from modules.utils import progress

logger = logging.getLogger(__name__)

CRITERIA = ("n_body", "purity", "concurrence", "fidelity")
MIXED_FAMILIES = {"mixture", "maximally_mixed", "two_design_average"}

# margins are evaluated in float; a certificate needs margin > MARGIN_EPSILON * scale
MARGIN_EPSILON = 1e-12


@dataclass(frozen=True)
class NoiseModel:
    p: float = 0.0
    circuit_error_rate: float = 0.0

    def __post_init__(self):
        require(0.0 <= self.p <= 1.0, f"depolarizing strength must lie in [0, 1], got {self.p}")
        require(0.0 <= self.circuit_error_rate <= 1.0,
                f"circuit error rate must lie in [0, 1], got {self.circuit_error_rate}")

    @property
    def noiseless(self) -> bool:
        return self.p == 0.0 and self.circuit_error_rate == 0.0


def _strength(p, exact: bool):
    require(0 <= p <= 1, f"depolarizing strength must lie in [0, 1], got {p}")
    if exact:
        return Fraction(str(p)) if isinstance(p, float) else Fraction(p)
    return float(p)


def _require_sld(a: EnumeratorVector):
    require(a.kind == "sld", f"expected an sld vector, got {a.kind}")


def depolarize_sld(a: EnumeratorVector, p) -> EnumeratorVector:
    """Entry i scaled by (1-p)^(2i)."""
    _require_sld(a)
    q = 1 - _strength(p, a.exact)
    values = tuple(v * q ** (2 * i) for i, v in enumerate(a.values))
    return EnumeratorVector(a.n, "sld", values, a.precision)


def purity_after_noise(a: EnumeratorVector, p):
    _require_sld(a)
    q = 1 - _strength(p, a.exact)
    return sum(v * q ** (2 * i) for i, v in enumerate(a.values))


def overlap_after_noise(a: EnumeratorVector, p):
    """Tr[rho E_p(rho)] for the pure state rho with SLD a."""
    _require_sld(a)
    q = 1 - _strength(p, a.exact)
    return sum(v * q**i for i, v in enumerate(a.values))


def noisy_family_enumerators(family: StateFamily, p) -> dict:
    sld = depolarize_sld(family_sld(family), p)
    return {"sld": sld, "apd": convert(sld, "apd"), "tpd": convert(sld, "tpd")}


def fit_depolarizing_strength(sld_ideal: EnumeratorVector, purity: float, tolerance: float = 1e-10) -> float:
    """Effective p whose noisy purity matches a measured purity (bisection).

    Experimental: assumes the measured state is the ideal one under local depolarizing noise.
    """
    _require_sld(sld_ideal)
    values = sld_ideal.as_array()
    weights = np.arange(values.size)

    def noisy_purity(p):
        return float(np.sum(values * (1 - p) ** (2 * weights)))

    if purity >= noisy_purity(0.0):
        return 0.0
    if purity <= noisy_purity(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        if noisy_purity(mid) > purity:
            lo = mid
        else:
            hi = mid
    logger.debug(f"Fitted depolarizing strength {lo:.6g} for purity {purity:.6g}")
    return (lo + hi) / 2


def max_biseparable_overlap(family: StateFamily, max_qubits: int = 16):
    """Largest overlap of a biseparable state with a stabilizer family's state.

    For a stabilizer state this is the maximal reduced purity 2^-E over all cuts;
    returns None when the family is not a stabilizer state or too large.
    """
    if not family.is_stabilizer or family.n > max_qubits:
        return None
    group = build_family_state(family)
    n = family.n
    generators = group.generators
    best = 0.0
    for size in range(1, n // 2 + 1):
        for cut in itertools.combinations(range(n), size):
            rest = [q for q in range(n) if q not in cut]
            # generators restricted to the complement decide the entanglement across the cut
            columns = rest + [n + q for q in rest]
            entropy = size - n + gf2_rank(generators[:, columns])
            best = max(best, 2.0 ** (-entropy))
    return best


class MarginFunction:
    """Criterion margin of a family as a function of the depolarizing strength p."""

    def __init__(self, family: StateFamily, criterion: str, bound: float = None):
        require(criterion in CRITERIA, f"unknown criterion {criterion!r}; known: {', '.join(CRITERIA)}")
        self.family = family
        self.criterion = criterion
        self.n = family.n
        self.sld = family_sld(family).as_array()
        self.weights = np.arange(self.n + 1)
        self.bound = bound
        if criterion == "fidelity":
            require(family.tag not in MIXED_FAMILIES, f"fidelity criterion needs a pure target state, got {family.label}")
            bound = bound if bound is not None else configuration.active().getFloat("Threshold", "fidelity_bound")
            biseparable = max_biseparable_overlap(family)
            self.bound = bound if biseparable is None else max(bound, biseparable)

    def __call__(self, p: float) -> float:
        n, a, w = self.n, self.sld, self.weights
        q = 1.0 - p
        if self.criterion == "fidelity":
            return float(np.sum(a * q**w)) - self.bound
        noisy = a * q ** (2 * w)
        if self.criterion == "n_body":
            return float(noisy[n]) - 2.0**-n
        purity = float(noisy.sum())
        if self.criterion == "purity":
            return float(np.sum(noisy * (1.0 - 2.0 * (n - w) / n)))
        all_triplets = float(np.sum(noisy * 1.5 ** (n - w) * 2.0 ** (-w)))
        return 2.0**-n + (1.0 - 2.0**-n) * purity - all_triplets

    def certifies(self, p: float) -> bool:
        if self.criterion == "n_body":
            scale = 2.0**-self.n
        elif self.criterion == "purity":
            scale = float(np.sum(self.sld * (1.0 - p) ** (2 * self.weights)))
        else:
            scale = 1.0
        return self(p) > MARGIN_EPSILON * scale


@dataclass(frozen=True)
class ThresholdResult:
    family: str
    n: int
    criterion: str
    threshold: float
    certified_at_zero: bool
    monotone: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def noise_threshold(family: StateFamily, criterion: str, bound: float = None, tolerance: float = None,
                    grid_points: int = None) -> ThresholdResult:
    """Largest p at which the criterion still certifies entanglement of the noisy state.

    A grid pre-scan checks monotonicity; bisection then refines the last certifying grid cell.
    """
    conf = configuration.active()
    tolerance = tolerance or conf.getFloat("Threshold", "tolerance")
    grid_points = grid_points or conf.getInt("Threshold", "grid_points")
    margin = MarginFunction(family, criterion, bound)

    grid = np.linspace(0.0, 1.0, grid_points + 1)
    certified = np.array([margin.certifies(p) for p in grid])
    if not certified[0]:
        logger.debug(f"{criterion} does not certify {family.label} at p=0")
        return ThresholdResult(family.label, family.n, criterion, 0.0, False, True)

    last = int(np.nonzero(certified)[0][-1])
    monotone = bool(np.all(certified[: last + 1]))
    if not monotone:
        logger.warning(f"{criterion} margin of {family.label} is not monotone in p; reporting the supremum")
    if last == grid_points:
        return ThresholdResult(family.label, family.n, criterion, 1.0, True, monotone)

    lo, hi = grid[last], grid[last + 1]
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        if margin.certifies(mid):
            lo = mid
        else:
            hi = mid
    logger.debug(f"{criterion} threshold of {family.label}: {lo:.6f}")
    return ThresholdResult(family.label, family.n, criterion, float(lo), True, monotone)


def threshold_scan(families, criteria, bound: float = None, show_progress: bool = False) -> pd.DataFrame:
    """Threshold table over (family, criterion) pairs, one row each."""
    families = list(families)
    criteria = list(criteria)
    rows = []
    with progress(len(families) * len(criteria), "Scanning noise thresholds", show_progress) as bar:
        for family in families:
            for criterion in criteria:
                try:
                    result = noise_threshold(family, criterion, bound)
                    rows.append(result.to_json())
                except ContractViolation as cv:
                    logger.warning(f"Skipping {criterion} for {family.label}: {cv}")
                bar()
    return pd.DataFrame(rows, columns=["family", "n", "criterion", "threshold", "certified_at_zero", "monotone"])

