"""Exception hierarchy shared by every module of the package."""


class SparseCCAError(Exception):
    """Base class for all package errors."""


class InputError(SparseCCAError, ValueError):
    """Malformed user input: bad shapes, non-finite entries, bad parameters."""


class DegenerateSampleError(InputError):
    """Fewer samples than an operation needs."""


class NotSymmetricError(InputError):
    """Matrix fails the relative symmetry tolerance."""


class NumericalError(SparseCCAError, ArithmeticError):
    """A numerical kernel could not produce a trustworthy answer."""


class NotPositiveDefiniteError(NumericalError):
    """Cholesky met a non-positive pivot.

    Attributes
    ----------
    index : int
        Zero-based row/column of the failing pivot.
    """

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"matrix is not positive definite (pivot {index} failed)")


class SingularCovarianceError(NotPositiveDefiniteError):
    """Sample covariance of Y is singular, so the pencil cannot be reduced."""


class ConvergenceError(NumericalError):
    """An iterative kernel exhausted its iteration budget."""


class TuningError(SparseCCAError):
    """No usable candidate on a tuning grid."""
