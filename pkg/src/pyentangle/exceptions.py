"""Exceptions raised by pyentangle."""

from typing import Any


class PyEntangleError(Exception):
    """Base class for package errors."""


class SupergraphViolationError(PyEntangleError, ValueError):
    """An edge of G- is missing from G+ (edges cannot be deleted)."""


class DimensionMismatchError(PyEntangleError, ValueError):
    """Inputs disagree on the number of units or classes."""


class CapacityError(PyEntangleError, ValueError):
    """Exhaustive enumeration requested over too many free dyads."""


class FitError(PyEntangleError, RuntimeError):
    """Network model fitting did not converge.

    Attributes:
        last_iterate: Parameter vector at the final iteration
        iterations: Number of iterations performed
    """

    def __init__(self, message: str, last_iterate: Any = None, iterations: int = 0):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class GlmError(PyEntangleError, RuntimeError):
    """Generalized linear model fit failed."""


class SeparationError(GlmError):
    """Coefficients diverge because the responses are perfectly separated."""


class RankDeficientError(GlmError):
    """Design matrix does not have full column rank."""


class DegenerateResponseError(SeparationError):
    """Responses carry no information (all equal or all zero)."""


class ConvergenceError(GlmError):
    """IRLS hit its iteration cap."""


class OneArmedClassError(PyEntangleError, ValueError):
    """A subclass has no treated or no control units."""


class EstimationImpossibleError(PyEntangleError, ValueError):
    """No subclass supports a treated/control comparison."""


class UndefinedSimilarityError(PyEntangleError, ValueError):
    """Every sample point has a zero gradient."""


class NumericalBoundaryError(PyEntangleError, ValueError):
    """A link function evaluated numerically at 0 or 1."""
