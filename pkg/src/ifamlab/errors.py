"""Exception hierarchy.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, NumericalError -> 4.
"""


class IfamError(Exception):
    """Base class for all package errors."""


class ConfigError(IfamError):
    """Invalid or inconsistent configuration."""


class DataError(IfamError):
    """Malformed or insufficient input data."""


class NumericalError(IfamError):
    """A numerical routine failed to produce a valid result."""


class NotPositiveDefiniteError(NumericalError):
    """Cholesky factorization failed.

    ``pivot`` is the 1-based index of the failing leading minor.
    """

    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap.

    ``last_delta`` holds the final iterate change where meaningful.
    """

    def __init__(self, message: str, last_delta: float | None = None):
        super().__init__(message)
        self.last_delta = last_delta


class InfeasibleError(NumericalError):
    """Optimization problem has no feasible point."""
