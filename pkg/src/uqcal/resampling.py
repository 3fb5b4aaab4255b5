"""Bootstrap intervals and Monte Carlo simulated reference values.

Each replicate draws from its own generator, seeded by
:func:`derive_replicate_seed` from the master seed and the replicate index.
Replicates are reassembled in index order, so results are bit-identical
whatever the number of worker processes.
"""

from __future__ import annotations

import enum
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import (
    DegenerateResamples,
    PercentileFallback,
    PrecisionWarning,
    ReplicateError,
    UQCalError,
)
from .generative import GenerativeSpec, make_rng
from .stats import PairedSample, Statistic, StatKind, compute

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
JACKKNIFE_LIMIT = 20000
JACKKNIFE_GROUPS = 200


def _splitmix64(x: int) -> int:
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & MASK64
    return x ^ (x >> 31)


def derive_replicate_seed(master_seed: int, replicate_index: int) -> int:
    """64-bit seed for one replicate stream.

    The splitmix64 finalizer is a bijection and ``master + (i+1)*gamma`` is
    injective in ``i`` for an odd gamma, so distinct indices never collide.
    """
    x = (int(master_seed) + (int(replicate_index) + 1) * GOLDEN_GAMMA) & MASK64
    return _splitmix64(x)


def replicate_seeds(master_seed: int, n: int) -> list[int]:
    return [derive_replicate_seed(master_seed, i) for i in range(n)]


class IntervalMethod(str, enum.Enum):
    BCA = "BCa"
    PERCENTILE = "percentile"
    MC_QUANTILE = "MC-quantile"
    T_INTERVAL = "t-interval"


@dataclass(frozen=True)
class IntervalEstimate:
    point: float
    lower: float
    upper: float
    level: float = 0.95
    bias: float = 0.0
    method: IntervalMethod = IntervalMethod.BCA
    replicate_count: int = 0
    degenerate: bool = False

    @property
    def half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class ReferenceSummary:
    """Serializable part of a :class:`SimulatedReference`."""

    generative: str
    mean: float
    standard_error: float
    interval: IntervalEstimate
    n_mc: int


@dataclass(frozen=True, eq=False)
class SimulatedReference:
    mean: float
    standard_error: float
    interval: IntervalEstimate
    replicates: np.ndarray
    generative: GenerativeSpec

    @property
    def n_mc(self) -> int:
        return int(self.replicates.size)

    def summary(self) -> ReferenceSummary:
        return ReferenceSummary(str(self.generative), self.mean, self.standard_error,
                                self.interval, self.n_mc)


def default_workers() -> int:
    return max(1, int(os.environ.get("UQCAL_WORKERS", "1")))


def run_chunks(func: Callable, tasks: Sequence, workers: int = 1) -> list:
    """Apply ``func`` to each task, in order, serially or in a process pool."""
    if workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))


def split_seeds(seeds: list[int], workers: int) -> list[tuple[int, list[int]]]:
    n_chunks = 1 if workers <= 1 else min(len(seeds), 4 * workers)
    bounds = np.linspace(0, len(seeds), n_chunks + 1).astype(int)
    return [(int(a), seeds[a:b]) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _mc_chunk(args) -> np.ndarray:
    u, features, stat, d, offset, seeds = args
    f = stat.prepare(PairedSample._trusted(np.zeros_like(u), u, features))
    out = np.empty(len(seeds))
    for k, s in enumerate(seeds):
        e = u * d.draw(make_rng(s), u.size)
        try:
            out[k] = f(e)
        except UQCalError as exc:
            raise ReplicateError(offset + k, exc) from exc
    return out


def _boot_chunk(args) -> np.ndarray:
    sample, stat, offset, seeds = args
    m = sample.size
    out = np.empty(len(seeds))
    for k, s in enumerate(seeds):
        idx = make_rng(s).integers(0, m, m)
        try:
            out[k] = compute(stat, sample.take(idx))
        except UQCalError as exc:
            raise ReplicateError(offset + k, exc) from exc
    return out


def bootstrap_replicates(sample: PairedSample, stat: Statistic, n_boot: int, seed: int,
                         workers: int = 1) -> np.ndarray:
    """Statistic over ``n_boot`` paired resamples of ``sample``."""
    seeds = replicate_seeds(seed, n_boot)
    tasks = [(sample, stat, off, chunk) for off, chunk in split_seeds(seeds, workers)]
    return np.concatenate(run_chunks(_boot_chunk, tasks, workers))


def jackknife_values(sample: PairedSample, stat: Statistic) -> np.ndarray:
    """Leave-one-out values, or leave-one-group-out above JACKKNIFE_LIMIT points."""
    m = sample.size
    kind = stat.kind
    if m <= JACKKNIFE_LIMIT and kind in (StatKind.ZMS, StatKind.NLL, StatKind.RCE):
        # exact closed forms of the leave-one-out means
        e2 = sample.errors**2
        u2 = sample.uncertainties**2
        if kind is StatKind.RCE:
            mse = (e2.sum() - e2) / (m - 1)
            mv = (u2.sum() - u2) / (m - 1)
            return 1.0 - np.sqrt(mse / mv)
        z2 = e2 / u2
        loo_zms = (z2.sum() - z2) / (m - 1)
        if kind is StatKind.ZMS:
            return loo_zms
        lu2 = np.log(u2)
        return 0.5 * (loo_zms + (lu2.sum() - lu2) / (m - 1) + math.log(2 * math.pi))
    if m <= JACKKNIFE_LIMIT:
        keep = np.ones(m, dtype=bool)
        out = np.empty(m)
        for i in range(m):
            keep[i] = False
            out[i] = compute(stat, sample.take(keep))
            keep[i] = True
        return out
    groups = np.arange(m) % JACKKNIFE_GROUPS
    return np.array([compute(stat, sample.take(groups != g)) for g in range(JACKKNIFE_GROUPS)])


def acceleration(jack: np.ndarray) -> float:
    d = jack.mean() - jack
    ss = float(np.sum(d * d))
    if ss == 0.0:
        return 0.0
    return float(np.sum(d**3)) / (6.0 * ss**1.5)


def bca_interval(point: float, reps: np.ndarray, jack: np.ndarray | None,
                 level: float = 0.95) -> IntervalEstimate:
    """BCa interval from bootstrap replicates and jackknife values.

    Falls back to the percentile interval when the bias correction is
    infinite (all replicates on one side of the point estimate).
    """
    b = reps.size
    bias = float(reps.mean()) - point
    if np.ptp(reps) == 0.0:
        warnings.warn("bootstrap replicates are all identical", DegenerateResamples, stacklevel=2)
        return IntervalEstimate(point, point, point, level, bias, IntervalMethod.BCA, b, True)
    alpha = 0.5 * (1.0 - level)
    frac = float(np.mean(reps < point))
    if frac <= 0.0 or frac >= 1.0:
        warnings.warn(
            f"BCa bias correction is infinite (fraction below point = {frac}); "
            "using the percentile interval", PercentileFallback, stacklevel=2,
        )
        lo, hi = np.quantile(reps, [alpha, 1.0 - alpha])
        return IntervalEstimate(point, float(lo), float(hi), level, bias,
                                IntervalMethod.PERCENTILE, b)
    z0 = float(ndtri(frac))
    a = acceleration(jack) if jack is not None else 0.0
    probs = []
    for z in (ndtri(alpha), ndtri(1.0 - alpha)):
        w = z0 + z
        probs.append(float(ndtr(z0 + w / (1.0 - a * w))))
    lo, hi = np.quantile(reps, probs)
    return IntervalEstimate(point, float(lo), float(hi), level, bias, IntervalMethod.BCA, b)


def percentile_interval(point: float, reps: np.ndarray, level: float = 0.95) -> IntervalEstimate:
    alpha = 0.5 * (1.0 - level)
    lo, hi = np.quantile(reps, [alpha, 1.0 - alpha])
    return IntervalEstimate(point, float(lo), float(hi), level, float(reps.mean()) - point,
                            IntervalMethod.PERCENTILE, reps.size, bool(np.ptp(reps) == 0.0))


def bootstrap_ci(sample: PairedSample, stat: Statistic, n_boot: int = 1000,
                 level: float = 0.95, seed: int = 0, *, method: str = "BCa",
                 workers: int = 1) -> IntervalEstimate:
    """Paired bootstrap confidence interval for ``stat`` on ``sample``."""
    if n_boot < 200:
        raise ValueError(f"need at least 200 bootstrap replicates, got {n_boot}")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    point = compute(stat, sample)
    reps = bootstrap_replicates(sample, stat, n_boot, seed, workers)
    if IntervalMethod(method) is IntervalMethod.PERCENTILE:
        return percentile_interval(point, reps, level)
    jack = None if np.ptp(reps) == 0.0 else jackknife_values(sample, stat)
    return bca_interval(point, reps, jack, level)


def simulate_reference(uncertainties, stat: Statistic, d: GenerativeSpec,
                       n_mc: int = 10000, seed: int = 0, *, level: float = 0.95,
                       workers: int = 1) -> SimulatedReference:
    """Monte Carlo reference of ``stat`` over calibrated synthetic errors.

    ``uncertainties`` is an array or a :class:`PairedSample` (whose features
    are then kept for feature binning).
    """
    if n_mc < 100:
        raise ValueError(f"need at least 100 Monte Carlo replicates, got {n_mc}")
    if isinstance(uncertainties, PairedSample):
        u, features = uncertainties.uncertainties, uncertainties.features
    else:
        u = np.asarray(uncertainties, dtype=float)
        features = None
        if u.ndim != 1 or u.size < 2 or np.any(~(u > 0)) or not np.all(np.isfinite(u)):
            raise ValueError("uncertainties must be a vector of positive finite values")
    seeds = replicate_seeds(seed, n_mc)
    tasks = [(u, features, stat, d, off, chunk) for off, chunk in split_seeds(seeds, workers)]
    reps = np.concatenate(run_chunks(_mc_chunk, tasks, workers))
    mean = float(reps.mean())
    se = float(reps.std(ddof=1)) / math.sqrt(n_mc)
    alpha = 0.5 * (1.0 - level)
    lo, hi = np.quantile(reps, [alpha, 1.0 - alpha])
    interval = IntervalEstimate(mean, float(lo), float(hi), level, 0.0,
                                IntervalMethod.MC_QUANTILE, n_mc, bool(lo == hi))
    reps.flags.writeable = False
    return SimulatedReference(mean, se, interval, reps, d)


def check_precision(ref: SimulatedReference | ReferenceSummary, interval: IntervalEstimate,
                    ratio: float = 0.1) -> bool:
    """True when 2*u(ref) < ratio * half-width of ``interval``; warns otherwise."""
    ok = 2.0 * ref.standard_error < ratio * interval.half_width
    if not ok:
        warnings.warn(
            f"Monte Carlo standard error {ref.standard_error:.3g} is not negligible "
            f"against interval half-width {interval.half_width:.3g}",
            PrecisionWarning, stacklevel=2,
        )
    return ok
