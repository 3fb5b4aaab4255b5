"""Exception and warning types.

Every data-level failure derives from :class:`UQCalError` so the CLI can map
it to exit code 1.
"""

from __future__ import annotations


class UQCalError(Exception):
    """Base class for all package errors."""


class InvalidSample(UQCalError, ValueError):
    pass


class DegenerateRanks(UQCalError, ValueError):
    pass


class DegenerateSpread(UQCalError, ValueError):
    pass


class TooManyBins(UQCalError, ValueError):
    pass


class BinTooSmall(UQCalError, ValueError):
    pass


class ZeroBinZMS(UQCalError, ValueError):
    pass


class InvalidStatistic(UQCalError, ValueError):
    pass


class NonConvergence(UQCalError, RuntimeError):
    """Optimizer gave up; ``last`` holds the final iterate."""

    def __init__(self, message: str, last=None):
        super().__init__(message)
        self.last = last


class ReplicateError(UQCalError):
    """A statistic failed on one Monte Carlo or bootstrap replicate."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"replicate {index}: {type(cause).__name__}: {cause}")
        self.index = index
        self.cause = cause


class IndeterminateZeta(UQCalError, ArithmeticError):
    pass


class NoPredefinedReference(UQCalError, ValueError):
    pass


class InsufficientBins(UQCalError, ValueError):
    pass


class DatasetError(UQCalError):
    pass


class MissingColumn(DatasetError):
    pass


class NonPositiveUncertainty(DatasetError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class NonFiniteValue(DatasetError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class EmptyFile(DatasetError):
    pass


class DegenerateResamples(UserWarning):
    """Bootstrap replicates collapsed to a single value."""


class PercentileFallback(UserWarning):
    """BCa bias correction was infinite; percentile interval used instead."""


class ScreeningWarning(UserWarning):
    """Robust skewness of a dataset exceeds its safety limit."""


class PrecisionWarning(UserWarning):
    """Monte Carlo standard error is not negligible against the interval."""
