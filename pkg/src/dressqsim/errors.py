"""Exception hierarchy shared by every module."""


class DressqsimError(Exception):
    """Base class for all package errors."""


class ContractViolation(DressqsimError, ValueError):
    """An input breaks the documented precondition of an operation."""


class CapacityError(DressqsimError):
    """A Hilbert-space dimension exceeds the configured maximum."""


class NumericalError(DressqsimError, ArithmeticError):
    """A numerical routine failed to converge or produced non-finite output."""


class ConfigError(DressqsimError, ValueError):
    """A configuration value is missing or invalid.

    ``key`` names the offending config entry (dotted path) when known.
    """

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class DressingError(DressqsimError, ValueError):
    """A noise channel is incompatible with the model or degenerate."""
