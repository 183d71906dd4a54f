# Error types for the SOSlasso library
"""
errors - Exception hierarchy shared by every soslasso module.

Validation problems derive from ValueError so callers that only know the
standard library still catch them. Numerical failures derive from
RuntimeError.
"""

from typing import Optional


class SOSLassoError(Exception):
    """Base class for all library errors."""


class IndexOutOfRange(SOSLassoError, ValueError):
    """A group index lies outside [0, p)."""


class EmptyGroup(SOSLassoError, ValueError):
    """A group has no members."""


class DuplicateWithinGroup(SOSLassoError, ValueError):
    """A coordinate appears twice in the same group."""


class GeometryMismatch(SOSLassoError, ValueError):
    """Generator parameters do not tile the coordinate range."""


class DimensionMismatch(SOSLassoError, ValueError):
    """Vector or matrix dimensions disagree with the group layout."""


class ShapeMismatch(SOSLassoError, ValueError):
    """Two matrices that must share a shape do not."""


class OverlappingGroups(SOSLassoError, ValueError):
    """A disjoint-only routine received overlapping groups."""


class UncoveredSupport(SOSLassoError, ValueError):
    """Nonzero coordinates (or design columns) fall outside every group."""


class BadLabels(SOSLassoError, ValueError):
    """Logistic responses are not exactly +1/-1."""


class UnequalSampleSizes(SOSLassoError, ValueError):
    """Tasks have different sample counts where a common n is required."""


class TooFewSamples(SOSLassoError, ValueError):
    """A task has fewer samples than cross-validation folds."""


class InvalidLambdaGrid(SOSLassoError, ValueError):
    """A regularization grid is empty, negative or not strictly descending."""


class GeneratorInfeasible(SOSLassoError, ValueError):
    """A random instance generator cannot satisfy its constraints."""


class NonpositiveKappa(SOSLassoError, ValueError):
    """An error bound was requested with a nonpositive RSC constant."""


class InputError(SOSLassoError, ValueError):
    """A user-supplied file or document is missing or malformed."""


class NoConvergence(SOSLassoError, RuntimeError):
    """An iterative routine hit its iteration cap before its tolerance.

    Attributes:
        iterations: Iterations performed
        residual: Residual at exit
    """

    def __init__(self, message: str, iterations: int = 0,
                 residual: Optional[float] = None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
