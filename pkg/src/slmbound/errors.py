"""Exception and warning types shared across the library."""

from __future__ import annotations

import numpy as np

__all__ = [
    "SingularMatrixError",
    "BudgetExceededError",
    "UnsupportedConfigurationError",
    "IllConditionedGramError",
    "GradientAccuracyWarning",
    "ConfigError",
]


class SingularMatrixError(np.linalg.LinAlgError):
    """A matrix required to be (numerically) full rank or SPD is not."""


class BudgetExceededError(RuntimeError):
    """A support enumeration would exceed the configured combination budget."""


class UnsupportedConfigurationError(ValueError):
    """The requested computation is outside the supported parameter regime."""


class IllConditionedGramError(RuntimeError):
    """A kernel Gram matrix is too ill conditioned to solve as requested.

    Carries the size of the largest usable test-point subset so callers can
    retry with fewer points.
    """

    def __init__(self, message: str, usable_size: int, condition: float):
        super().__init__(message)
        self.usable_size = usable_size
        self.condition = condition


class GradientAccuracyWarning(RuntimeWarning):
    """A finite-difference gradient failed its step-halving consistency check."""


class ConfigError(ValueError):
    """An experiment configuration document is invalid."""
