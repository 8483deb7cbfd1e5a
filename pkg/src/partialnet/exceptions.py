"""Exception hierarchy shared by every partialnet module."""


class PartialNetError(Exception):
    """Base class for all errors raised by partialnet."""


class DatasetError(PartialNetError, ValueError):
    """Malformed observation matrix (shape, non-finite entries, CSV layout)."""


class DegenerateColumnError(DatasetError):
    """A column has zero sample variance."""

    def __init__(self, column: str):
        super().__init__(f"column {column!r} has zero sample variance")
        self.column = column


class SingularMatrixError(PartialNetError, ValueError):
    """Symmetric factorization failed or hit a pivot below the singularity threshold."""


class CollinearityError(PartialNetError, ValueError):
    """Regression design matrix is rank deficient."""


class DegenerateError(PartialNetError, ValueError):
    """A variance that must be strictly positive is not."""


class BoundaryError(PartialNetError, ValueError):
    """Correlation on the boundary |rho| >= 1 where a transform is infinite."""


class SampleTooSmallError(PartialNetError, ValueError):
    """Not enough observations for the requested test."""


class ElicitationError(PartialNetError, ValueError):
    """Pilot sample cannot produce a proper prior."""


class UndefinedRateError(PartialNetError, ValueError):
    """ROC rate undefined: the truth has no positives or no negatives."""


class ReconciliationError(PartialNetError, ValueError):
    """Scores and ground-truth files do not cover the same replicates."""
