"""Exception types shared across the package."""

from __future__ import annotations


class HeisenbergError(Exception):
    """Base class for all library errors."""


class DimensionError(HeisenbergError, ValueError):
    """Operands live on Heisenberg groups of different dimension."""


class DomainError(HeisenbergError, ValueError):
    """A parameter lies outside the range where an object is defined."""


class SingularInputError(DomainError):
    """Evaluation requested on the diagonal of a singular kernel."""


class ConfigError(HeisenbergError, ValueError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class QuadratureError(HeisenbergError, RuntimeError):
    """A quadrature did not reach its tolerance within the node budget.

    The best available estimate is attached so that callers can decide
    whether it is usable.
    """

    def __init__(self, message: str, best: float, est_error: float):
        super().__init__(f"{message} (best={best:.6e}, est_error={est_error:.2e})")
        self.best = best
        self.est_error = est_error


class NonPSDError(HeisenbergError, RuntimeError):
    """A covariance matrix is not positive semidefinite beyond regularization."""


class BlowupError(HeisenbergError, RuntimeError):
    """A time stepper produced values growing beyond the safety threshold."""
