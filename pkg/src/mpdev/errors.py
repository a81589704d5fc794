"""Exception hierarchy shared by the library and the CLI."""


class MPDevError(Exception):
    exit_code = 1


class ParameterError(MPDevError, ValueError):
    """Invalid numeric parameter (out-of-range phi, negative count, ...)."""

    exit_code = 2


class DomainError(MPDevError, ValueError):
    """Argument outside the domain where a formula is stated."""

    exit_code = 2


class ConfigError(MPDevError):
    exit_code = 2


class CapacityError(MPDevError):
    """Requested enumeration is too large to run."""

    exit_code = 3


class ReportIOError(MPDevError, OSError):
    exit_code = 4


class ConsistencyError(MPDevError, RuntimeError):
    """Internal numerical consistency check failed."""
