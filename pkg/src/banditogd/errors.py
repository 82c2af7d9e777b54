"""Exception hierarchy shared by every module."""


class BanditOGDError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(BanditOGDError, ValueError):
    pass


class ParameterError(BanditOGDError, ValueError):
    pass


class FeasibilityError(BanditOGDError):
    """A query point or iterate left the feasible set.

    This always indicates a mis-configured exploration radius or shrinkage,
    never a recoverable numerical event.
    """


class SolverError(BanditOGDError):
    pass


class UnsupportedLossError(BanditOGDError):
    pass


class InsufficientDataError(BanditOGDError):
    pass


class ConfigError(BanditOGDError):
    """Invalid experiment or run configuration (CLI exit code 2)."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
