"""Point estimators of calibration and correlation statistics.

All estimators act on a :class:`PairedSample` of errors ``E`` and
uncertainties ``u``. The binned statistics (ENCE, ZMSE) use equal-count bins
along the uncertainty or along a user-supplied feature column.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import (
    BinTooSmall,
    DegenerateRanks,
    DegenerateSpread,
    InvalidSample,
    InvalidStatistic,
    TooManyBins,
    ZeroBinZMS,
)

LOG_2PI = math.log(2.0 * math.pi)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PairedSample:
    """Paired errors and strictly positive uncertainties.

    ``features`` is an optional ``(M, k)`` array of extra columns kept for
    binning on input features.
    """

    errors: np.ndarray
    uncertainties: np.ndarray
    features: np.ndarray | None = None
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        e = np.array(self.errors, dtype=float).ravel()
        u = np.array(self.uncertainties, dtype=float).ravel()
        if e.shape != u.shape:
            raise InvalidSample(
                f"errors ({e.size}) and uncertainties ({u.size}) differ in length"
            )
        if e.size < 2:
            raise InvalidSample(f"need at least 2 points, got {e.size}")
        if not np.all(np.isfinite(e)):
            raise InvalidSample(f"non-finite error at index {int(np.flatnonzero(~np.isfinite(e))[0])}")
        bad = ~(np.isfinite(u) & (u > 0))
        if bad.any():
            raise InvalidSample(
                f"uncertainty must be positive and finite (index {int(np.flatnonzero(bad)[0])})"
            )
        f = self.features
        if f is not None:
            f = np.array(f, dtype=float)
            if f.ndim == 1:
                f = f[:, None]
            if f.shape[0] != e.size:
                raise InvalidSample("feature rows do not match sample size")
            f = _frozen(f)
        object.__setattr__(self, "errors", _frozen(e))
        object.__setattr__(self, "uncertainties", _frozen(u))
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @classmethod
    def _trusted(cls, errors, uncertainties, features=None, feature_names=()):
        # Skips validation; callers guarantee the invariants (resampling loops).
        obj = object.__new__(cls)
        object.__setattr__(obj, "errors", errors)
        object.__setattr__(obj, "uncertainties", uncertainties)
        object.__setattr__(obj, "features", features)
        object.__setattr__(obj, "feature_names", feature_names)
        return obj

    @property
    def size(self) -> int:
        return int(self.errors.size)

    M = size

    def take(self, index: np.ndarray) -> PairedSample:
        """Sub-sample (or resample) pairs jointly."""
        f = None if self.features is None else self.features[index]
        return PairedSample._trusted(
            self.errors[index], self.uncertainties[index], f, self.feature_names
        )

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, PairedSample):
            return NotImplemented
        same_f = (self.features is None and other.features is None) or (
            self.features is not None
            and other.features is not None
            and np.array_equal(self.features, other.features)
        )
        return (
            np.array_equal(self.errors, other.errors)
            and np.array_equal(self.uncertainties, other.uncertainties)
            and same_f
            and self.feature_names == other.feature_names
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class BinningConfig:
    n_bins: int
    min_bin_size: int = 20
    # "uncertainty" or the column index of a feature in PairedSample.features
    variable: str | int = "uncertainty"

    def __post_init__(self):
        if int(self.n_bins) < 1:
            raise InvalidStatistic(f"n_bins must be >= 1, got {self.n_bins}")
        if int(self.min_bin_size) < 1:
            raise InvalidStatistic("min_bin_size must be >= 1")
        if isinstance(self.variable, str) and self.variable != "uncertainty":
            raise InvalidStatistic(f"unknown binning variable {self.variable!r}")
        object.__setattr__(self, "n_bins", int(self.n_bins))
        object.__setattr__(self, "min_bin_size", int(self.min_bin_size))

    def check(self, m: int) -> None:
        if self.n_bins > m:
            raise TooManyBins(f"{self.n_bins} bins for {m} points")
        if m // self.n_bins < self.min_bin_size:
            raise BinTooSmall(
                f"M/N = {m}/{self.n_bins} gives bins smaller than {self.min_bin_size}"
            )

    def sort_key(self, sample: PairedSample) -> np.ndarray:
        if self.variable == "uncertainty":
            return sample.uncertainties
        if sample.features is None:
            raise InvalidStatistic("binning on a feature column but sample has no features")
        col = int(self.variable)
        if not 0 <= col < sample.features.shape[1]:
            raise InvalidStatistic(f"feature column {col} out of range")
        return sample.features[:, col]


class StatKind(str, enum.Enum):
    ZMS = "zms"
    CC = "cc"
    RCE = "rce"
    ENCE = "ence"
    ZMSE = "zmse"
    NLL = "nll"

    @property
    def binned(self) -> bool:
        return self in (StatKind.ENCE, StatKind.ZMSE)


@dataclass(frozen=True)
class Statistic:
    """A statistic under study, with its binning when it is a binned one."""

    kind: StatKind
    binning: BinningConfig | None = None

    def __post_init__(self):
        kind = StatKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind.binned and self.binning is None:
            raise InvalidStatistic(f"{kind.value} requires a BinningConfig")
        if not kind.binned and self.binning is not None:
            raise InvalidStatistic(f"{kind.value} does not accept a BinningConfig")

    @classmethod
    def of(cls, name: str | StatKind, n_bins: int = 20, min_bin_size: int = 20,
           variable: str | int = "uncertainty") -> Statistic:
        kind = StatKind(name.lower() if isinstance(name, str) else name)
        binning = BinningConfig(n_bins, min_bin_size, variable) if kind.binned else None
        return cls(kind, binning)

    @property
    def name(self) -> str:
        return self.kind.value.upper()

    def __call__(self, sample: PairedSample) -> float:
        return compute(self, sample)

    def predefined_reference(self, sample: PairedSample) -> float | None:
        if self.kind is StatKind.ZMS:
            return 1.0
        if self.kind is StatKind.NLL:
            return nll_ref(sample)
        return None

    def prepare(self, sample: PairedSample) -> Callable[[np.ndarray], float]:
        """Evaluator for fixed uncertainties and varying errors.

        Caches the bin order and uncertainty ranks, which do not change
        across Monte Carlo replicates built on the same uncertainties.
        """
        u = sample.uncertainties
        kind = self.kind
        if kind is StatKind.ZMS:
            inv_u2 = 1.0 / (u * u)
            return lambda e: float(np.mean(e * e * inv_u2))
        if kind is StatKind.RCE:
            rmv = math.sqrt(float(np.mean(u * u)))
            return lambda e: (rmv - math.sqrt(float(np.mean(e * e)))) / rmv
        if kind is StatKind.NLL:
            inv_u2 = 1.0 / (u * u)
            const = float(np.mean(np.log(u * u))) + LOG_2PI
            return lambda e: 0.5 * (float(np.mean(e * e * inv_u2)) + const)
        if kind is StatKind.CC:
            ru = _centered_ranks(u, "uncertainties")
            return lambda e: _rank_corr(ru, _centered_ranks(np.abs(e), "|errors|"))
        binning = self.binning
        binning.check(sample.size)
        bins = equal_count_bins(binning.sort_key(sample), binning.n_bins)
        us = u[bins.order]
        if kind is StatKind.ENCE:
            return lambda e: _ence_sorted(e[bins.order], us, bins)
        return lambda e: _zmse_sorted(e[bins.order], us, bins)


def compute(stat: Statistic, sample: PairedSample) -> float:
    kind = stat.kind
    if kind is StatKind.ZMS:
        return zms(sample)
    if kind is StatKind.CC:
        return spearman_cc(sample)
    if kind is StatKind.RCE:
        return rce(sample)
    if kind is StatKind.ENCE:
        return ence(sample, stat.binning)
    if kind is StatKind.ZMSE:
        return zmse(sample, stat.binning)
    return nll(sample)


def z_scores(sample: PairedSample) -> np.ndarray:
    return sample.errors / sample.uncertainties


def zms(sample: PairedSample) -> float:
    """Mean squared z-score; 1 for a calibrated sample."""
    z = z_scores(sample)
    return float(np.mean(z * z))


def rce(sample: PairedSample) -> float:
    """Relative calibration error (RMV - RMSE) / RMV."""
    rmse = math.sqrt(float(np.mean(sample.errors**2)))
    rmv = math.sqrt(float(np.mean(sample.uncertainties**2)))
    return (rmv - rmse) / rmv


def _centered_ranks(x: np.ndarray, what: str) -> np.ndarray:
    r = rankdata(x)
    r -= r.mean()
    if not np.any(r):
        raise DegenerateRanks(f"{what} are constant; rank correlation undefined")
    return r


def _rank_corr(ra: np.ndarray, rb: np.ndarray) -> float:
    c = float(ra @ rb) / math.sqrt(float(ra @ ra) * float(rb @ rb))
    return min(1.0, max(-1.0, c))


def spearman_cc(sample: PairedSample) -> float:
    """Spearman rank correlation between |E| and u (average ranks for ties)."""
    if sample.size < 3:
        raise DegenerateRanks("rank correlation needs at least 3 points")
    return _rank_corr(
        _centered_ranks(sample.uncertainties, "uncertainties"),
        _centered_ranks(np.abs(sample.errors), "|errors|"),
    )


@dataclass(frozen=True, eq=False)
class EqualCountBins:
    """Sort order plus the N+1 boundaries (positions in sorted order)."""

    order: np.ndarray
    bounds: np.ndarray

    @property
    def n_bins(self) -> int:
        return int(self.bounds.size - 1)

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.bounds)

    def ranges(self) -> list[range]:
        return [range(int(a), int(b)) for a, b in zip(self.bounds[:-1], self.bounds[1:])]

    def indices(self, k: int) -> np.ndarray:
        """Original indices of the points in bin ``k``."""
        return self.order[self.bounds[k]:self.bounds[k + 1]]


def equal_count_bins(sort_key: Sequence[float] | np.ndarray, n_bins: int) -> EqualCountBins:
    key = np.asarray(sort_key, dtype=float)
    m = key.size
    if n_bins < 1:
        raise TooManyBins("need at least one bin")
    if n_bins > m:
        raise TooManyBins(f"{n_bins} bins for {m} points")
    order = np.argsort(key, kind="stable")
    bounds = (np.arange(n_bins + 1, dtype=np.int64) * m) // n_bins
    return EqualCountBins(order, bounds)


def _bin_sums(x: np.ndarray, bins: EqualCountBins) -> np.ndarray:
    return np.add.reduceat(x, bins.bounds[:-1])


def _ence_sorted(e: np.ndarray, u: np.ndarray, bins: EqualCountBins) -> float:
    # the bin size cancels in the RMSE/RMV ratio
    ratio = np.sqrt(_bin_sums(e * e, bins) / _bin_sums(u * u, bins))
    return float(np.mean(np.abs(1.0 - ratio)))


def _zmse_sorted(e: np.ndarray, u: np.ndarray, bins: EqualCountBins) -> float:
    z = e / u
    bin_zms = _bin_sums(z * z, bins) / bins.sizes
    if np.any(bin_zms == 0.0):
        k = int(np.flatnonzero(bin_zms == 0.0)[0])
        raise ZeroBinZMS(f"bin {k} has only zero errors")
    return float(np.mean(np.abs(np.log(bin_zms))))


def _binned_arrays(sample: PairedSample, binning: BinningConfig):
    binning.check(sample.size)
    bins = equal_count_bins(binning.sort_key(sample), binning.n_bins)
    return sample.errors[bins.order], sample.uncertainties[bins.order], bins


def ence(sample: PairedSample, binning: BinningConfig) -> float:
    """Mean over equal-count bins of the absolute in-bin RCE."""
    return _ence_sorted(*_binned_arrays(sample, binning))


def zmse(sample: PairedSample, binning: BinningConfig) -> float:
    """Mean over equal-count bins of |ln ZMS_k|."""
    return _zmse_sorted(*_binned_arrays(sample, binning))


def binned_rce(sample: PairedSample, binning: BinningConfig) -> np.ndarray:
    e, u, bins = _binned_arrays(sample, binning)
    return 1.0 - np.sqrt(_bin_sums(e * e, bins) / _bin_sums(u * u, bins))


def binned_zms(sample: PairedSample, binning: BinningConfig) -> np.ndarray:
    e, u, bins = _binned_arrays(sample, binning)
    z = e / u
    return _bin_sums(z * z, bins) / bins.sizes


def nll(sample: PairedSample) -> float:
    """Gaussian negative log-likelihood score."""
    u2 = sample.uncertainties**2
    return 0.5 * (zms(sample) + float(np.mean(np.log(u2))) + LOG_2PI)


def nll_ref(sample: PairedSample) -> float:
    """NLL expected for calibrated errors with a normal generative law."""
    u2 = sample.uncertainties**2
    return 0.5 * (1.0 + float(np.mean(np.log(u2))) + LOG_2PI)


def beta_gm(values: Sequence[float] | np.ndarray) -> float:
    """Groeneveld-Meeden robust skewness: (mean - median) / E|X - median|.

    Lies in [-1, 1] and vanishes for symmetric data.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size < 3:
        raise DegenerateSpread("beta_gm needs at least 3 values")
    med = float(np.median(x))
    spread = float(np.mean(np.abs(x - med)))
    if spread == 0.0:
        raise DegenerateSpread("mean absolute deviation about the median is zero")
    return min(1.0, max(-1.0, (float(np.mean(x)) - med) / spread))
