"""Exception types raised across the package."""


class CorrCAError(Exception):
    """Base class for all errors raised by corrca."""


class ValidationError(CorrCAError, ValueError):
    """Input data is malformed (non-numeric cells, NaN/Inf, bad arguments)."""


class DimensionError(CorrCAError, ValueError):
    """Array shapes disagree with each other or with a fitted model."""


class DefinitenessError(CorrCAError, ValueError):
    """A matrix that must be positive definite is not.

    Usually means the within-repetition covariance is singular; pass a
    ``tsvd:K`` or ``shrinkage:gamma`` regularization.
    """


class RankError(CorrCAError, ValueError):
    """A matrix that must be invertible is rank deficient."""
