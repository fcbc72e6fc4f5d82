import logging
import math
import os
import tempfile
from contextlib import contextmanager
from fractions import Fraction

from alive_progress import alive_bar

from modules.errors import InputFileError, PrecisionError

logger = logging.getLogger(__name__)

TOOL_NAME = "qwe-toolkit"
TOOL_VERSION = "1.0.0"


def binomial_row(n: int) -> list:
    # C(n, 0..n) by the multiplicative rule, exact ints
    row = [1] * (n + 1)
    for i in range(1, n + 1):
        row[i] = row[i - 1] * (n - i + 1) // i
    return row


def to_float(value) -> float:
    """Convert an exact scalar to float, refusing silent overflow."""
    try:
        if isinstance(value, Fraction):
            # int / int true division keeps big numerators finite when the ratio is
            result = value.numerator / value.denominator
        else:
            result = float(value)
    except OverflowError as oe:
        raise PrecisionError(f"value does not fit into float64: {oe}") from oe
    if math.isinf(result):
        raise PrecisionError("value does not fit into float64")
    return result


def common_denominator(values) -> tuple:
    """Write rationals as integers over one denominator.

    Returns (numerators, denominator).
    """
    fractions = [Fraction(v) for v in values]
    denominator = 1
    for f in fractions:
        denominator = math.lcm(denominator, f.denominator)
    return [f.numerator * (denominator // f.denominator) for f in fractions], denominator


def format_scalar(value):
    # exact values travel as "p/q" strings, floats as JSON numbers
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, int):
        return str(value)
    return float(value)


def parse_scalar(token, source="<input>"):
    if isinstance(token, bool):
        raise InputFileError(source, f"boolean is not a number: {token}")
    if isinstance(token, (int, float)):
        return float(token)
    try:
        return Fraction(str(token).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise InputFileError(source, f"not a rational number: {token!r}") from e


def format_decimal(value) -> str:
    # CSV cells: shortest round-trip decimal
    return repr(to_float(value))


def atomic_write(path: str, data, mode: str = "w"):
    """Write through a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.exists(directory):
        os.makedirs(directory)
    fd, tmppath = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode + ("b" if isinstance(data, bytes) else "")) as f:
            f.write(data)
        os.replace(tmppath, path)
    except Exception:
        if os.path.exists(tmppath):
            os.remove(tmppath)
        raise
    logger.debug(f"Wrote {path}")
    return path


@contextmanager
def progress(count: int, title: str, enabled: bool = True):
    """alive_bar for CLI runs; a no-op counter when disabled (library and tests)."""
    if not enabled:
        yield lambda *args, **kwargs: None
        return
    with alive_bar(count, title=title, force_tty=True, stats="(eta:{eta})") as bar:
        yield bar
