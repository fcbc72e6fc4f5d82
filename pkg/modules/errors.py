import logging

logger = logging.getLogger(__name__)


class QweError(Exception):
    """Base class of every error raised by the library.

    Each subclass carries the process exit code used by `cli_tools.py`.
    """

    exit_code = 1


class ContractViolation(QweError):
    """Invalid input: wrong kind, out-of-range parameter, inconsistent vectors."""

    exit_code = 2


class ResourceLimitError(QweError):
    """The request exceeds a configured size limit (qubits, group size, table size)."""

    exit_code = 3


class PrecisionError(ResourceLimitError):
    """Float mode cannot represent the requested matrix entries."""


class ConvergenceError(ResourceLimitError):
    """An iterative routine hit its iteration cap."""


class InputFileError(QweError):
    """Malformed or unreadable input file."""

    exit_code = 4

    def __init__(self, path, detail: str, line: int = None):
        self.path = path
        self.line = line
        where = f"{path}" if line is None else f"{path}:{line}"
        super().__init__(f"{where}: {detail}")


def require(condition: bool, message: str):
    if not condition:
        logger.debug(f"Contract violation: {message}")
        raise ContractViolation(message)
