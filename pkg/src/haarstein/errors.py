"""Exception types raised across the package."""


class HaarSteinError(Exception):
    """Base class for package errors."""


class DimensionError(HaarSteinError, ValueError):
    """Invalid or mismatched matrix dimension."""


class DegenerateInputError(HaarSteinError, ValueError):
    """Numerically rank-deficient input where full rank is required."""


class NormalizationError(HaarSteinError, ValueError):
    """A coefficient matrix cannot be normalized (e.g. it is zero)."""


class NumericalError(HaarSteinError, ArithmeticError):
    """An iterative or quadrature routine failed to converge."""


class EstimationError(HaarSteinError, ValueError):
    """Too few samples for a requested Monte Carlo estimate."""
