import json
import logging
import os
from fractions import Fraction

import pandas as pd

from modules import configuration
from modules.enumerators import EXACT, FLOAT, KINDS, EnumeratorVector
from modules.errors import ContractViolation, InputFileError
from modules.estimation import EstimationReport, hoeffding_samples, samples_required, sld_variance
from modules.states.families import StateFamily, family_enumerators
from modules.states.stabilizer import BUILTIN_CODES, StabilizerGroup, builtin_code
from modules.transforms import convert
from modules.utils import progress, to_float

logger = logging.getLogger(__name__)

# CLI family names -> (family tag, parameter slot)
FAMILY_SPECS = {
    "product": ("product_zero", None),
    "bell-pairs": ("bell_pairs", None),
    "ghz": ("ghz", "e"),
    "line": ("line_graph", None),
    "cycle": ("cycle_graph", "e"),
    "dicke": ("dicke", "e"),
    "dicke-half": ("dicke", None),
    "ame6": ("ame6", None),
    "superposition": ("superposition", "p"),
    "mixture": ("mixture", "p"),
    "two-design": ("two_design_average", None),
    "maximally-mixed": ("maximally_mixed", None),
}

PRECISIONS = {"exact": EXACT, "f64": FLOAT, FLOAT: FLOAT}


def parse_family(spec: str, n: int) -> StateFamily:
    """Family from a `name[:parameter]` string such as `ghz:4` or `mixture:1/3`."""
    name, _, parameter = spec.partition(":")
    if name not in FAMILY_SPECS:
        raise ContractViolation(f"unknown family {name!r}; known: {', '.join(FAMILY_SPECS)}")
    tag, slot = FAMILY_SPECS[name]
    if parameter and slot is None:
        raise ContractViolation(f"family {name} takes no parameter")
    if name == "dicke-half":
        return StateFamily(tag, n, e=n // 2)
    if slot == "e" and parameter:
        try:
            return StateFamily(tag, n, e=int(parameter))
        except ValueError as ve:
            raise ContractViolation(f"{name}: excitation count must be an integer, got {parameter!r}") from ve
    if slot == "p":
        if not parameter:
            raise ContractViolation(f"family {name} needs a parameter, e.g. {name}:1/2")
        try:
            return StateFamily(tag, n, p=Fraction(parameter))
        except (ValueError, ZeroDivisionError) as e:
            raise ContractViolation(f"{name}: not a probability: {parameter!r}") from e
    return StateFamily(tag, n)


def resolve_code(spec: str) -> StabilizerGroup:
    """Built-in code name, or a .stab / .json stabilizer file."""
    if spec in BUILTIN_CODES:
        return builtin_code(spec)
    if not os.path.exists(spec):
        raise InputFileError(spec, f"no such code file (built-in codes: {', '.join(BUILTIN_CODES)})")
    return StabilizerGroup.load(spec)


def resolve_precision(requested: str, n: int) -> str:
    """Exact up to [Precision] exact_max_n unless float is asked for."""
    if requested is not None:
        if requested not in PRECISIONS:
            raise ContractViolation(f"unknown precision {requested!r}; use exact or f64")
        return PRECISIONS[requested]
    limit = configuration.active().getInt("Precision", "exact_max_n")
    if n > limit:
        logger.warning(f"n={n} exceeds exact_max_n={limit}; switching to float64")
        return FLOAT
    return EXACT


def all_kinds(vector: EnumeratorVector, precision: str = EXACT) -> dict:
    return {kind: convert(vector, kind, precision) for kind in KINDS}


def family_vectors(family: StateFamily, precision: str = EXACT) -> dict:
    logger.debug(f"Enumerators of {family.label} (n={family.n})")
    return all_kinds(family_enumerators(family), precision)


def vectors_frame(vectors: dict) -> pd.DataFrame:
    """One column per kind, rows indexed by weight / subsystem size / triplet count."""
    n = next(iter(vectors.values())).n
    df = pd.DataFrame({kind: list(vec.values) for kind, vec in vectors.items()}, index=range(n + 1))
    df.index.name = "i"
    return df


def estimation_frame(report: EstimationReport) -> pd.DataFrame:
    df = vectors_frame(report.vectors)
    for kind, (lower, upper) in report.ci.items():
        df[f"{kind}_lower"] = lower
        df[f"{kind}_upper"] = upper
    for kind, errors in report.stderr.items():
        df[f"{kind}_stderr"] = errors
    return df


def _read_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as je:
            raise InputFileError(path, f"invalid JSON ({je.msg})", je.lineno) from je


def load_analysis_input(path: str) -> tuple:
    """Read an estimation report, an enumerate output or a single vector.

    Returns:
        (vectors dict, EstimationReport or None, code section dict or None)
    """
    logger.debug(f"Reading analysis input {path}")
    data = _read_json(path)
    if "estimation" in data:
        report = EstimationReport.from_json(data["estimation"])
        return report.vectors, report, None
    if "vectors" in data:
        vectors = {k: EnumeratorVector.from_json(v, f"{path} vectors.{k}") for k, v in data["vectors"].items()}
        return vectors, None, data.get("code")
    vector = EnumeratorVector.from_json(data.get("vector", data), path)
    return {vector.kind: vector}, None, None


def plan_frame(family_spec: str, ns, target_variance: float, epsilon: float, delta: float,
               simultaneous: bool = False, show_progress: bool = False) -> pd.DataFrame:
    """Shot budgets per n: variance-based SLD count and Hoeffding bounds per kind."""
    rows = []
    ns = list(ns)
    with progress(len(ns), "Planning sample sizes", show_progress) as bar:
        for n in ns:
            family = parse_family(family_spec, n)
            tpd = convert(family_enumerators(family), "tpd")
            variance = sld_variance(tpd, 1)
            row = {
                "family": family.label,
                "n": n,
                "sld_variance_per_shot": to_float(variance.total),
                "samples_required": samples_required(tpd, target_variance),
            }
            for kind in ("sld", "apd", "tpd"):
                row[f"hoeffding_{kind}"] = hoeffding_samples(kind, n, epsilon, delta, simultaneous)
            rows.append(row)
            bar()
    return pd.DataFrame(rows)
