import json
import logging
from fractions import Fraction

import pandas as pd

from modules import configuration
from modules.sampler.samples import BellSampleSet
from modules.utils import TOOL_NAME, TOOL_VERSION, atomic_write, format_decimal

logger = logging.getLogger(__name__)


class Exporter:
    """Writes command artifacts (JSON, CSV, binary Bell samples) with a provenance block.

    Files carry no timestamps, so a rerun with the embedded settings and seed is
    byte-identical.
    """

    def __init__(self, command: str, seed: int = None, precision: str = None, arguments: dict = None):
        self.command = command
        self.seed = seed
        self.precision = precision
        # resolved command-line options, keyed by option name without the leading dashes
        self.arguments = arguments or {}

    def metadata(self) -> dict:
        return {
            "tool": TOOL_NAME,
            "version": TOOL_VERSION,
            "command": self.command,
            "seed": self.seed,
            "precision": self.precision,
            "config": {"arguments": self.arguments, "settings": configuration.active().asDict()},
        }

    def __emit(self, path: str, text: str):
        if path is None:
            print(text, end="")
            return None
        logger.info(f"Output file: {path}")
        return atomic_write(path, text)

    def toJSON(self, path: str, payload: dict):
        document = {"metadata": self.metadata(), **payload}
        return self.__emit(path, json.dumps(document, indent=2) + "\n")

    def toCSV(self, path: str, df: pd.DataFrame, index: bool = False):
        # exact rationals as decimals, metadata as leading '#' lines
        df = df.map(lambda v: format_decimal(v) if isinstance(v, Fraction) else v)
        header = "".join(f"# {key}: {json.dumps(value)}\n" for key, value in self.metadata().items())
        return self.__emit(path, header + df.to_csv(index=index, lineterminator="\n"))

    def toSamples(self, path: str, samples: BellSampleSet):
        """Binary `.bell` file when the path says so, JSON otherwise."""
        if path is not None and path.endswith(".bell"):
            blob = samples.with_provenance(metadata=self.metadata()).to_bytes()
            logger.info(f"Output file: {path}")
            return atomic_write(path, blob)
        return self.toJSON(path, {"samples": samples.to_json()})
