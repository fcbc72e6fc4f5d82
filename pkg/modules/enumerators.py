"""Enumerator vectors: the (n+1)-entry distributions every module exchanges.

Entry i always refers to Pauli weight, subsystem size or triplet count i.
"""

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from modules.errors import ContractViolation, InputFileError, require
from modules.utils import format_scalar, parse_scalar, to_float

logger = logging.getLogger(__name__)

KINDS = ("sld", "dual_sld", "apd", "dual_apd", "tpd", "dual_tpd")
EXACT = "exact"
FLOAT = "float64"


@dataclass(frozen=True)
class EnumeratorVector:
    n: int
    kind: str
    values: tuple
    precision: str = EXACT
    normalization: str = field(default="normalized", compare=False)

    def __post_init__(self):
        require(self.kind in KINDS, f"unknown enumerator kind: {self.kind}")
        require(self.n >= 1, f"qubit count must be positive, got {self.n}")
        require(len(self.values) == self.n + 1,
                f"{self.kind} vector needs {self.n + 1} entries, got {len(self.values)}")
        require(self.precision in (EXACT, FLOAT), f"unknown precision: {self.precision}")
        if self.precision == EXACT:
            object.__setattr__(self, "values", tuple(Fraction(v) for v in self.values))
        else:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def of(cls, kind: str, values, precision: str = None):
        values = list(values)
        if precision is None:
            exact = all(isinstance(v, (int, Fraction)) for v in values)
            precision = EXACT if exact else FLOAT
        return cls(n=len(values) - 1, kind=kind, values=tuple(values), precision=precision)

    @property
    def exact(self) -> bool:
        return self.precision == EXACT

    def __getitem__(self, i):
        return self.values[i]

    def __len__(self):
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array([to_float(v) for v in self.values], dtype=float)

    def to_float(self) -> "EnumeratorVector":
        if not self.exact:
            return self
        return EnumeratorVector(self.n, self.kind, tuple(self.as_array()), FLOAT)

    def total(self):
        return sum(self.values)

    def check_distribution(self, tolerance: float = 1e-9):
        """TPDs and dual SLDs are probability distributions."""
        values = self.as_array()
        if np.any(values < -tolerance):
            raise ContractViolation(f"{self.kind} has negative entries: {values.min()}")
        if abs(values.sum() - 1.0) > tolerance:
            raise ContractViolation(f"{self.kind} entries sum to {values.sum()}, not 1")

    def to_json(self) -> dict:
        return {"n": self.n, "kind": self.kind, "values": [format_scalar(v) for v in self.values]}

    @classmethod
    def from_json(cls, data: dict, source="<input>") -> "EnumeratorVector":
        try:
            n = int(data["n"])
            kind = data["kind"]
            raw = data["values"]
        except (KeyError, TypeError, ValueError) as e:
            raise InputFileError(source, f"enumerator vector is missing field {e}") from e
        if kind not in KINDS:
            raise InputFileError(source, f"field 'kind': unknown enumerator kind {kind!r}")
        values = [parse_scalar(v, f"{source} values[{i}]") for i, v in enumerate(raw)]
        precision = EXACT if all(isinstance(v, Fraction) for v in values) else FLOAT
        if len(values) != n + 1:
            raise InputFileError(source, f"field 'values': expected {n + 1} entries, got {len(values)}")
        return cls(n=n, kind=kind, values=tuple(values), precision=precision)

    @classmethod
    def load(cls, path: str) -> "EnumeratorVector":
        logger.debug(f"Reading enumerator vector from {path}")
        with open(path, "r", encoding="utf-8") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as je:
                raise InputFileError(path, f"invalid JSON ({je.msg})", je.lineno) from je
        # output files of this tool wrap the vector next to their metadata
        if "vector" in data:
            data = data["vector"]
        return cls.from_json(data, path)
