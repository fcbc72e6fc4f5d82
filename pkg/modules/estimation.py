"""Single-shot estimators on Bell samples, bootstrap intervals, sample-complexity planning
and damping-factor mitigation."""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from modules import configuration
from modules.analysis import criterion_margins
from modules.enumerators import EXACT, FLOAT, KINDS, EnumeratorVector
from modules.errors import ContractViolation, PrecisionError, require
from modules.noise import fit_depolarizing_strength
from modules.sampler.samples import BellSampleSet
from modules.transforms import TransformKind, convert, integer_lattice
from modules.utils import binomial_row, common_denominator, to_float

logger = logging.getLogger(__name__)

# estimated modes beyond this n lose significance in the sld table
FLOAT_SIGNIFICANCE_N = 60


@dataclass(frozen=True, eq=False)
class EstimatorTable:
    """Entry [i][s]: the single-shot estimate of enumerator entry i for a shot with s singlets.

    Stored as integer rows over one denominator per row; dual tables flip the sign of odd s.
    """

    n: int
    numerators: dict
    denominators: dict

    def _base(self, kind: str) -> str:
        require(kind in KINDS, f"unknown enumerator kind: {kind}")
        return kind.replace("dual_", "")

    def signs(self, kind: str) -> list:
        if kind.startswith("dual_"):
            return [-1 if s % 2 else 1 for s in range(self.n + 1)]
        return [1] * (self.n + 1)

    def rows(self, kind: str) -> tuple:
        """(integer rows with signs applied, denominators)."""
        base = self._base(kind)
        signs = self.signs(kind)
        rows = self.numerators[base]
        if kind.startswith("dual_"):
            rows = tuple(tuple(v * sg for v, sg in zip(row, signs)) for row in rows)
        return rows, self.denominators[base]

    def exact(self, kind: str) -> np.ndarray:
        rows, dens = self.rows(kind)
        table = np.empty((self.n + 1, self.n + 1), dtype=object)
        for i, (row, den) in enumerate(zip(rows, dens)):
            for s, v in enumerate(row):
                table[i, s] = Fraction(v, den)
        return table

    def floats(self, kind: str) -> np.ndarray:
        cache = self.__dict__.setdefault("_float_cache", {})
        if kind not in cache:
            rows, dens = self.rows(kind)
            try:
                values = np.array([[v / den for v in row] for row, den in zip(rows, dens)], dtype=float)
            except OverflowError as oe:
                raise PrecisionError(f"{kind} estimator table overflows float64 at n={self.n}") from oe
            if not np.all(np.isfinite(values)):
                raise PrecisionError(f"{kind} estimator table overflows float64 at n={self.n}")
            cache[kind] = values
        return cache[kind]


def build_estimator_tables(n: int) -> EstimatorTable:
    """All six tables, from the O(n^2) integer recurrences of the inverse shadow transforms."""
    require(isinstance(n, int) and n >= 1, f"qubit count must be a positive integer, got {n}")
    logger.debug(f"Building estimator tables for n={n}")
    # a shot with s singlets is a TPD delta at triplet count n - s
    sld_rows, sld_dens = integer_lattice(TransformKind.T_tilde_inv, n)
    apd_rows, apd_dens = integer_lattice(TransformKind.T_tilde_prime_inv, n)
    tpd_rows = tuple(tuple(int(i == n - s) for s in range(n + 1)) for i in range(n + 1))
    numerators = {
        "sld": tuple(tuple(row[::-1]) for row in sld_rows),
        "apd": tuple(tuple(row[::-1]) for row in apd_rows),
        "tpd": tpd_rows,
    }
    denominators = {"sld": tuple(sld_dens), "apd": tuple(apd_dens), "tpd": (1,) * (n + 1)}
    if n > FLOAT_SIGNIFICANCE_N:
        logger.warning(f"sld estimates at n={n} lose significance when exported as float64")
    return EstimatorTable(n, numerators, denominators)


def table_expectation(table: EstimatorTable, kind: str, tpd: EnumeratorVector) -> EnumeratorVector:
    """Expected single-shot estimate when shots follow the TPD exactly."""
    require(tpd.kind == "tpd" and tpd.n == table.n, "expectation needs a tpd vector of matching size")
    n = table.n
    target = kind
    if tpd.exact:
        nums, den = common_denominator(tpd.values)
        singlet = [nums[n - s] for s in range(n + 1)]
        rows, dens = table.rows(kind)
        values = tuple(Fraction(sum(v * h for v, h in zip(row, singlet)), d * den) for row, d in zip(rows, dens))
        return EnumeratorVector(n, target, values, EXACT)
    singlet = tpd.as_array()[::-1]
    return EnumeratorVector(n, target, tuple(table.floats(kind) @ singlet), FLOAT)


@dataclass
class EstimationReport:
    n: int
    shots: int
    vectors: dict
    ci: dict
    stderr: dict
    purity: float
    purity_ci: tuple
    mean_triplets: float
    ci_level: float
    bootstrap: int
    retained_fraction: float = 1.0
    mitigation: dict = None
    margin_stderr: dict = field(default_factory=dict)
    replicates: dict = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "shots": self.shots,
            "vectors": {k: v.to_json() for k, v in self.vectors.items()},
            "ci": {k: {"lower": list(lo), "upper": list(hi)} for k, (lo, hi) in self.ci.items()},
            "stderr": {k: list(v) for k, v in self.stderr.items()},
            "purity": self.purity,
            "purity_ci": list(self.purity_ci),
            "mean_triplets": self.mean_triplets,
            "ci_level": self.ci_level,
            "bootstrap": self.bootstrap,
            "retained_fraction": self.retained_fraction,
            "mitigation": self.mitigation,
            "margin_stderr": self.margin_stderr,
        }

    @classmethod
    def from_json(cls, data: dict) -> "EstimationReport":
        vectors = {k: EnumeratorVector.from_json(v) for k, v in data["vectors"].items()}
        ci = {k: (np.array(v["lower"]), np.array(v["upper"])) for k, v in data.get("ci", {}).items()}
        stderr = {k: np.array(v) for k, v in data.get("stderr", {}).items()}
        return cls(
            n=int(data["n"]),
            shots=int(data["shots"]),
            vectors=vectors,
            ci=ci,
            stderr=stderr,
            purity=float(data["purity"]),
            purity_ci=tuple(data.get("purity_ci", (data["purity"], data["purity"]))),
            mean_triplets=float(data["mean_triplets"]),
            ci_level=float(data.get("ci_level", 0.95)),
            bootstrap=int(data.get("bootstrap", 0)),
            retained_fraction=float(data.get("retained_fraction", 1.0)),
            mitigation=data.get("mitigation"),
            margin_stderr=data.get("margin_stderr", {}),
        )


def estimate_enumerators(samples: BellSampleSet, table: EstimatorTable = None, bootstrap_resamples: int = None,
                         seed: int = None, ci_level: float = None) -> EstimationReport:
    """Sample means of the estimator tables, with percentile-bootstrap intervals.

    Args:
        samples (BellSampleSet): per-shot or histogram samples.
        table (EstimatorTable): tables for samples.n, built when omitted.
        bootstrap_resamples (int): resample count, 0 disables intervals.
        seed (int): bootstrap RNG key; defaults to the samples' seed.
        ci_level (float): two-sided interval level.

    Raises:
        ContractViolation: empty sample set or size mismatch.
    """
    conf = configuration.active()
    if bootstrap_resamples is None:
        bootstrap_resamples = conf.getInt("Estimation", "bootstrap")
    ci_level = ci_level or conf.getFloat("Estimation", "ci_level")
    n = samples.n
    table = table or build_estimator_tables(n)
    require(table.n == n, f"estimator table is for n={table.n}, samples have n={n}")
    shots = samples.shots
    if shots == 0:
        raise ContractViolation("cannot estimate from an empty sample set")

    singlets = samples.triplet_histogram()[::-1].astype(np.int64)
    counts = [int(c) for c in singlets]
    vectors = {}
    for kind in KINDS:
        rows, dens = table.rows(kind)
        values = tuple(
            to_float(Fraction(sum(v * c for v, c in zip(row, counts)), den * shots)) for row, den in zip(rows, dens)
        )
        vectors[kind] = EnumeratorVector(n, kind, values, FLOAT)

    signs = np.array(table.signs("dual_tpd"), dtype=float)
    purity = float(np.dot(signs, singlets)) / shots
    triplet_counts = n - np.arange(n + 1)
    mean_triplets = float(np.dot(triplet_counts, singlets)) / shots

    ci, stderr, replicates, margin_stderr = {}, {}, {}, {}
    purity_ci = (purity, purity)
    if bootstrap_resamples > 0:
        rng = np.random.Generator(np.random.Philox(key=seed if seed is not None else (samples.seed or 0)))
        draws = rng.multinomial(shots, singlets / shots, size=bootstrap_resamples)
        alpha = (1.0 - ci_level) / 2
        for kind in KINDS:
            try:
                reps = draws @ table.floats(kind).T / shots
            except PrecisionError as pe:
                logger.warning(f"No bootstrap interval for {kind}: {pe}")
                continue
            replicates[kind] = reps
            ci[kind] = (np.quantile(reps, alpha, axis=0), np.quantile(reps, 1 - alpha, axis=0))
            stderr[kind] = reps.std(axis=0, ddof=1)
        purity_reps = draws @ signs / shots
        replicates["purity"] = purity_reps
        purity_ci = (float(np.quantile(purity_reps, alpha)), float(np.quantile(purity_reps, 1 - alpha)))
        if all(k in replicates for k in ("sld", "apd", "tpd")):
            spread = criterion_margins(n, replicates["sld"], replicates["apd"], replicates["tpd"], purity_reps)
            margin_stderr = {k: float(np.std(v, ddof=1)) for k, v in spread.items()}

    logger.debug(f"Estimated enumerators from {shots} shots, purity {purity:.4f}")
    return EstimationReport(
        n=n,
        shots=shots,
        vectors=vectors,
        ci=ci,
        stderr=stderr,
        purity=purity,
        purity_ci=purity_ci,
        mean_triplets=mean_triplets,
        ci_level=ci_level,
        bootstrap=bootstrap_resamples,
        retained_fraction=float(samples.provenance.get("retained_fraction", 1.0)),
        margin_stderr=margin_stderr,
        replicates=replicates,
    )


@dataclass(frozen=True)
class SldVariance:
    per_index: tuple
    total: object
    shots: int

    def to_json(self) -> dict:
        return {"shots": self.shots, "per_index": [to_float(v) for v in self.per_index], "total": to_float(self.total)}


def sld_variance(tpd: EnumeratorVector, shots: int = 1) -> SldVariance:
    """Variance of the SLD estimator after `shots` Bell samples from the TPD."""
    require(tpd.kind == "tpd", f"sld_variance needs a tpd vector, got {tpd.kind}")
    require(isinstance(shots, int) and shots >= 1, f"shot count must be a positive integer, got {shots}")
    n = tpd.n
    rows, dens = integer_lattice(TransformKind.T_tilde_inv, n)
    if tpd.exact:
        nums, den = common_denominator(tpd.values)
        scale = dens[0]
        per_index = []
        for row in rows:
            second = Fraction(sum(v * v * a for v, a in zip(row, nums)), scale * scale * den)
            first = Fraction(sum(v * a for v, a in zip(row, nums)), scale * den)
            per_index.append((second - first * first) / shots)
        return SldVariance(tuple(per_index), sum(per_index), shots)
    inverse = np.array([[v / d for v in row] for row, d in zip(rows, dens)], dtype=float)
    a = tpd.as_array()
    per_index = ((inverse**2) @ a - (inverse @ a) ** 2) / shots
    return SldVariance(tuple(per_index), float(per_index.sum()), shots)


def samples_required(tpd: EnumeratorVector, target_variance: float) -> int:
    """Smallest N with total SLD variance <= target."""
    require(target_variance > 0, f"target variance must be positive, got {target_variance}")
    total = sld_variance(tpd, 1).total
    if isinstance(total, Fraction):
        return max(1, math.ceil(total / Fraction(str(target_variance))))
    return max(1, math.ceil(total / target_variance))


def hoeffding_range(kind: str, n: int, index: int = None) -> Fraction:
    """Spread of the single-shot estimator values entering the Hoeffding bound."""
    base = kind.replace("dual_", "")
    if base == "tpd":
        return Fraction(1)
    if base == "apd":
        return Fraction(2)
    if base != "sld":
        raise ContractViolation(f"unknown enumerator kind: {kind}")
    binomials = binomial_row(n)
    indices = range(n + 1) if index is None else [index]
    return max(Fraction(2 * 3**i * binomials[i], 2**n) for i in indices)


def hoeffding_samples(kind: str, n: int, epsilon: float, delta: float, simultaneous: bool = False,
                      index: int = None) -> int:
    """Shots guaranteeing |estimate - value| <= epsilon with probability 1 - delta."""
    require(0 < epsilon < 1 and 0 < delta < 1, f"epsilon and delta must lie in (0, 1), got {epsilon}, {delta}")
    require(index is None or 0 <= index <= n, f"index must lie in 0..{n}, got {index}")
    confidence = math.log(2 * (n + 1) / delta) if simultaneous else math.log(2 / delta)
    spread = hoeffding_range(kind, n, index)
    return max(1, math.ceil(float(spread * spread) * confidence / (2 * epsilon**2)))


@dataclass(frozen=True)
class MitigationModel:
    lambdas: tuple
    reference: str = ""
    zero_ideal: tuple = ()
    clamped: tuple = ()

    def __post_init__(self):
        require(len(self.lambdas) >= 2, "mitigation needs at least two damping factors")
        require(self.lambdas[0] == 1.0, "damping factor at weight 0 must be 1")
        require(all(0.0 < v <= 1.0 for v in self.lambdas), "damping factors must lie in (0, 1]")

    @property
    def n(self) -> int:
        return len(self.lambdas) - 1

    def to_json(self) -> dict:
        return {"lambdas": list(self.lambdas), "reference": self.reference, "zero_ideal": list(self.zero_ideal),
                "clamped": list(self.clamped)}


def fit_mitigation(reference_raw: EnumeratorVector, reference_ideal: EnumeratorVector, reference: str = "",
                   floor: float = None) -> MitigationModel:
    """Damping factors raw_i / ideal_i from a calibration state, clamped to (floor, 1]."""
    require(reference_raw.kind == "sld" and reference_ideal.kind == "sld", "mitigation is fitted on sld vectors")
    require(reference_raw.n == reference_ideal.n, "reference vectors differ in size")
    floor = floor or configuration.active().getFloat("Estimation", "mitigation_floor")
    raw, ideal = reference_raw.as_array(), reference_ideal.as_array()
    lambdas, zero_ideal, clamped = [1.0], [], []
    for i in range(1, raw.size):
        if ideal[i] == 0.0:
            zero_ideal.append(i)
            lambdas.append(1.0)
            continue
        value = raw[i] / ideal[i]
        if value > 1.0 or value < floor:
            clamped.append(i)
            logger.warning(f"Damping factor {value:.4g} at weight {i} clamped")
            value = min(1.0, max(value, floor))
        lambdas.append(float(value))
    if zero_ideal:
        logger.warning(f"Ideal reference vanishes at weights {zero_ideal}; damping factor set to 1")
    return MitigationModel(tuple(lambdas), reference, tuple(zero_ideal), tuple(clamped))


def fit_depolarizing_mitigation(raw_purity: float, reference_ideal: EnumeratorVector,
                                reference: str = "") -> MitigationModel:
    """Experimental: damping factors (1-p)^(2i) with p fitted to a measured purity."""
    p = fit_depolarizing_strength(reference_ideal, raw_purity)
    floor = configuration.active().getFloat("Estimation", "mitigation_floor")
    lambdas = tuple(max(floor, (1.0 - p) ** (2 * i)) for i in range(reference_ideal.n + 1))
    return MitigationModel(lambdas, reference or f"depolarizing p={p:.6g}")


def mitigate(raw: EnumeratorVector, model: MitigationModel) -> EnumeratorVector:
    require(raw.kind == "sld", f"mitigation acts on sld vectors, got {raw.kind}")
    require(raw.n == model.n, f"model is for n={model.n}, vector has n={raw.n}")
    values = tuple(v / lam for v, lam in zip(raw.as_array(), model.lambdas))
    return EnumeratorVector(raw.n, "sld", values, FLOAT)


def mitigated_vectors(raw: EnumeratorVector, model: MitigationModel) -> dict:
    sld = mitigate(raw, model)
    return {kind: convert(sld, kind, FLOAT) for kind in KINDS}
