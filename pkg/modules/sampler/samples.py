"""BellSampleSet: per-shot Bell symbols or triplet-count histograms, plus file codecs.

Symbol encoding per pair is 2*x + z with x the X(x)X bit and z the Z(x)Z bit:
Phi+ = 0, Psi+ = 1, Phi- = 2, Psi- = 3 (the singlet).
"""

import json
import logging
import struct
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from modules.errors import ContractViolation, InputFileError, require

logger = logging.getLogger(__name__)

SYMBOLS = ("Phi+", "Psi+", "Phi-", "Psi-")
SINGLET = 3
SYMBOL_ENCODING = "symbols"
HISTOGRAM_ENCODING = "histogram"

MAGIC = b"BELL"
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class BellSampleSet:
    n: int
    shots: int
    encoding: str
    symbols: np.ndarray = None
    histogram: tuple = None
    seed: int = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        require(self.n >= 1, f"pair count must be positive, got {self.n}")
        require(self.encoding in (SYMBOL_ENCODING, HISTOGRAM_ENCODING), f"unknown encoding {self.encoding}")
        if self.encoding == SYMBOL_ENCODING:
            symbols = np.asarray(self.symbols, dtype=np.uint8).reshape(-1, self.n)
            require(symbols.shape[0] == self.shots, f"{symbols.shape[0]} symbol rows for {self.shots} shots")
            require(not np.any(symbols > 3), "Bell symbols must lie in 0..3")
            symbols.setflags(write=False)
            object.__setattr__(self, "symbols", symbols)
        else:
            histogram = tuple(int(c) for c in self.histogram)
            require(len(histogram) == self.n + 1, f"histogram needs {self.n + 1} bins, got {len(histogram)}")
            require(all(c >= 0 for c in histogram), "histogram counts must be non-negative")
            require(sum(histogram) == self.shots, f"histogram sums to {sum(histogram)}, not {self.shots}")
            object.__setattr__(self, "histogram", histogram)

    @classmethod
    def from_symbols(cls, symbols, seed=None, provenance=None) -> "BellSampleSet":
        symbols = np.atleast_2d(np.asarray(symbols, dtype=np.uint8))
        return cls(symbols.shape[1], symbols.shape[0], SYMBOL_ENCODING, symbols=symbols, seed=seed,
                   provenance=dict(provenance or {}))

    @classmethod
    def from_histogram(cls, histogram, seed=None, provenance=None) -> "BellSampleSet":
        histogram = [int(c) for c in histogram]
        return cls(len(histogram) - 1, sum(histogram), HISTOGRAM_ENCODING, histogram=tuple(histogram), seed=seed,
                   provenance=dict(provenance or {}))

    @property
    def per_shot(self) -> bool:
        return self.encoding == SYMBOL_ENCODING

    def singlet_counts(self) -> np.ndarray:
        require(self.per_shot, "singlet counts per shot need the per-shot encoding")
        return np.count_nonzero(self.symbols == SINGLET, axis=1)

    def triplet_histogram(self) -> np.ndarray:
        """Counts indexed by the number of triplets per shot."""
        if not self.per_shot:
            return np.array(self.histogram, dtype=np.int64)
        triplets = self.n - self.singlet_counts()
        return np.bincount(triplets, minlength=self.n + 1).astype(np.int64)

    def with_symbols(self, symbols, **provenance) -> "BellSampleSet":
        return BellSampleSet.from_symbols(symbols, self.seed, {**self.provenance, **provenance})

    def with_provenance(self, **provenance) -> "BellSampleSet":
        return replace(self, provenance={**self.provenance, **provenance})

    def concat(self, other: "BellSampleSet") -> "BellSampleSet":
        require(self.n == other.n, f"cannot pool {self.n}-pair and {other.n}-pair samples")
        provenance = {**self.provenance, **other.provenance}
        if self.per_shot and other.per_shot:
            return BellSampleSet.from_symbols(np.vstack([self.symbols, other.symbols]), self.seed, provenance)
        return BellSampleSet.from_histogram(self.triplet_histogram() + other.triplet_histogram(), self.seed, provenance)

    def header(self) -> dict:
        return {"n": self.n, "shots": self.shots, "encoding": self.encoding, "seed": self.seed,
                "provenance": self.provenance}

    def to_json(self) -> dict:
        data = self.header()
        if self.per_shot:
            data["shots_data"] = ["".join(str(int(s)) for s in row) for row in self.symbols]
            data["symbols"] = list(SYMBOLS)
        else:
            data["histogram"] = list(self.histogram)
        return data

    @classmethod
    def from_json(cls, data: dict, source="<input>") -> "BellSampleSet":
        try:
            n, shots, encoding = int(data["n"]), int(data["shots"]), data["encoding"]
            seed, provenance = data.get("seed"), data.get("provenance", {})
            if encoding == SYMBOL_ENCODING:
                rows = [[int(c) for c in row] for row in data["shots_data"]]
                symbols = np.array(rows, dtype=np.uint8).reshape(-1, n)
                return cls(n, shots, encoding, symbols=symbols, seed=seed, provenance=provenance)
            return cls(n, shots, encoding, histogram=tuple(data["histogram"]), seed=seed, provenance=provenance)
        except (KeyError, TypeError, ValueError) as e:
            raise InputFileError(source, f"malformed Bell sample set ({type(e).__name__}: {e})") from e
        except ContractViolation as cv:
            raise InputFileError(source, str(cv)) from cv

    def to_bytes(self) -> bytes:
        header = json.dumps(self.header(), sort_keys=True).encode("utf-8")
        if self.per_shot:
            flat = self.symbols.ravel()
            padded = np.zeros(-(-flat.size // 4) * 4, dtype=np.uint8)
            padded[: flat.size] = flat
            quads = padded.reshape(-1, 4)
            payload = (quads[:, 0] << 6 | quads[:, 1] << 4 | quads[:, 2] << 2 | quads[:, 3]).astype(np.uint8).tobytes()
        else:
            payload = np.array(self.histogram, dtype="<u8").tobytes()
        return MAGIC + struct.pack("<BI", FORMAT_VERSION, len(header)) + header + payload

    @classmethod
    def from_bytes(cls, blob: bytes, source="<input>") -> "BellSampleSet":
        if blob[:4] != MAGIC:
            raise InputFileError(source, "not a Bell sample file (bad magic)")
        version, length = struct.unpack("<BI", blob[4:9])
        if version != FORMAT_VERSION:
            raise InputFileError(source, f"unsupported Bell sample file version {version}")
        try:
            header = json.loads(blob[9: 9 + length].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise InputFileError(source, f"corrupt header ({e})") from e
        payload = np.frombuffer(blob[9 + length:], dtype=np.uint8)
        n, shots = int(header["n"]), int(header["shots"])
        try:
            if header["encoding"] == SYMBOL_ENCODING:
                unpacked = np.stack([(payload >> shift) & 3 for shift in (6, 4, 2, 0)], axis=1).ravel()
                if unpacked.size < n * shots:
                    raise InputFileError(source, f"payload holds {unpacked.size} symbols, expected {n * shots}")
                symbols = unpacked[: n * shots].reshape(shots, n)
                return cls(n, shots, SYMBOL_ENCODING, symbols=symbols, seed=header.get("seed"),
                           provenance=header.get("provenance", {}))
            histogram = np.frombuffer(payload.tobytes(), dtype="<u8")
            return cls(n, shots, HISTOGRAM_ENCODING, histogram=tuple(int(c) for c in histogram),
                       seed=header.get("seed"), provenance=header.get("provenance", {}))
        except ContractViolation as cv:
            raise InputFileError(source, str(cv)) from cv

    def histogram_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"triplets": np.arange(self.n + 1), "count": self.triplet_histogram()})

    @classmethod
    def load(cls, path: str) -> "BellSampleSet":
        logger.debug(f"Reading Bell samples from {path}")
        if path.endswith(".json"):
            with open(path, "r", encoding="utf-8") as f:
                try:
                    data = json.load(f)
                except json.JSONDecodeError as je:
                    raise InputFileError(path, f"invalid JSON ({je.msg})", je.lineno) from je
            # output files of this tool wrap the samples next to their metadata
            return cls.from_json(data.get("samples", data), path)
        with open(path, "rb") as f:
            return cls.from_bytes(f.read(), path)
