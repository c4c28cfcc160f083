"""Exception types shared across the package.

The CLI maps these onto process exit codes: construction-invariant
violations exit 2, resolution/budget failures exit 3, usage errors exit 1.
"""


class FmlabError(Exception):
    """Base class for all package errors."""


class UnsupportedDimensionError(FmlabError, ValueError):
    """Raised when a grid or evaluator is requested in a dimension other than 1 or 2."""


class InvalidExponentError(FmlabError, ValueError):
    """Raised for out-of-range Lebesgue/Lorentz/smoothness exponents."""


class InvalidRangeError(FmlabError, ValueError):
    """Raised for empty or malformed ranges (dilation windows, fit windows, ...)."""


class InvalidDataError(FmlabError, ValueError):
    """Raised when numerical input data is unusable (e.g. nonpositive values in a log fit)."""


class GridMismatchError(FmlabError, ValueError):
    """Raised when two fields that must share a grid do not."""


class ResolutionError(FmlabError, RuntimeError):
    """Raised when a grid cannot resolve the requested object within the points budget."""


class ConstructionError(FmlabError, RuntimeError):
    """Raised when a structural invariant of the multiplier construction fails."""
