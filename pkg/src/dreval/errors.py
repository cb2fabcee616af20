"""Exception hierarchy shared by the library and the CLI.

Every exception carries the process exit code the CLI maps it to.
"""


class DrevalError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DomainError(DrevalError, ValueError):
    """Raised when an operation is called outside its mathematical domain."""

    exit_code = 2


class ConfigError(DrevalError):
    """Raised when an experiment configuration cannot be loaded or is inconsistent."""

    exit_code = 2


class LogParseError(DrevalError):
    """Raised when a log line is not a well-formed event record."""

    exit_code = 2

    def __init__(self, message: str, line_number: int | None = None, path: str | None = None):
        self.line_number = line_number
        self.path = path
        parts = [p for p in (path, None if line_number is None else str(line_number)) if p]
        where = ":".join(parts) if path else f"line {line_number}"
        super().__init__(f"{where}: {message}" if parts else message)


class LogValidationError(LogParseError):
    """Raised when a parsed log line violates an event invariant."""


class DegeneratePrincipalComponentError(DomainError):
    """Raised when covariates carry no variance along any direction."""


class CapacityError(DrevalError):
    """Raised when an instance is too large or data is too scarce to proceed."""

    exit_code = 3


class InsufficientDataError(CapacityError):
    """Raised when a dataset cannot support even one replicate of a protocol."""
