"""Standardized zeta-scores and the sensitivity-gated validation workflow.

Also hosts the studies built on simulated references: scans over the
generative law and over datasets, the size-scaling study of binned
statistics on synthetic data, and the extrapolation-to-zero-bins test.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
import zlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats as sps

from .errors import (
    IndeterminateZeta,
    InsufficientBins,
    InvalidStatistic,
    NoPredefinedReference,
    ScreeningWarning,
    UQCalError,
)
from .generative import GenerativeSpec, ModelKind, SyntheticModelSpec, draw_uncertainties, make_rng
from .resampling import (
    IntervalEstimate,
    IntervalMethod,
    ReferenceSummary,
    SimulatedReference,
    bootstrap_ci,
    check_precision,
    derive_replicate_seed,
    replicate_seeds,
    run_chunks,
    simulate_reference,
    split_seeds,
)
from .stats import (
    BinningConfig,
    EqualCountBins,
    PairedSample,
    Statistic,
    StatKind,
    _ence_sorted,
    _zmse_sorted,
    beta_gm,
    z_scores,
)

logger = logging.getLogger(__name__)

# beta_GM safety limits for u^2 and for E^2 / Z^2
BETA_GM_LIMIT_U2 = 0.6
BETA_GM_LIMIT_E2 = 0.8

# reference lines theta = intercept + slope * sqrt(N/M) for calibrated synthetic data
REFERENCE_LINES = {
    ("nig", "ence"): (0.0, 0.56),
    ("nig", "zmse"): (0.0, 1.14),
    ("t6ig", "ence"): (0.004, 0.779),
    ("t6ig", "zmse"): (0.006, 1.577),
}

DEFAULT_M_GRID = (2000, 4000, 8000, 12000, 16000)
DEFAULT_N_GRID = (10, 20, 30, 40, 50)
DEFAULT_NU_GRID = (3, 4, 5, 6, 12, 24)


def substream(seed: int, *labels: str | int) -> int:
    """Deterministic child seed for a named purpose."""
    s = int(seed)
    for lab in labels:
        key = lab if isinstance(lab, int) else zlib.crc32(str(lab).encode())
        s = derive_replicate_seed(s, key)
    return s


class Scheme(str, enum.Enum):
    BS = "BS"
    SIM_N = "SimN"
    SIM_T = "SimT"
    SIM2_N = "Sim2N"
    SIM2_T = "Sim2T"

    @classmethod
    def sim(cls, d: GenerativeSpec, two: bool = False) -> Scheme:
        return cls(("Sim2" if two else "Sim") + d.label)


class Centering(str, enum.Enum):
    ON_ESTIMATE = "on-estimate"
    ON_REFERENCE = "on-reference"


class Verdict(str, enum.Enum):
    VALIDATED = "validated"
    REJECTED = "rejected"
    CANNOT_VALIDATE = "cannot-validate"
    INDETERMINATE = "indeterminate"


def zeta(theta_est: float, theta_ref: float, interval: IntervalEstimate | Sequence[float],
         centering: Centering | str = Centering.ON_ESTIMATE) -> float:
    """Deviation of ``theta_est`` from ``theta_ref`` in units of the interval half-range.

    On-estimate centering measures the half-range from ``theta_est`` (the
    interval is a confidence interval of the estimate); on-reference
    centering measures it from ``theta_ref`` (the interval is the spread of
    simulated reference values).
    """
    if isinstance(interval, IntervalEstimate):
        lower, upper, degenerate = interval.lower, interval.upper, interval.degenerate
    else:
        lower, upper = interval
        degenerate = lower == upper
    diff = theta_est - theta_ref
    if diff == 0.0:
        return 0.0
    if degenerate:
        raise IndeterminateZeta("interval is degenerate")
    if Centering(centering) is Centering.ON_ESTIMATE:
        den = (upper - theta_est) if diff <= 0 else (theta_est - lower)
    else:
        den = (theta_ref - lower) if diff <= 0 else (upper - theta_ref)
    if not den > 0:
        raise IndeterminateZeta(
            f"zeta denominator {den:g} <= 0 (est={theta_est:g}, ref={theta_ref:g}, "
            f"I=[{lower:g}, {upper:g}], {Centering(centering).value})"
        )
    return diff / den


@dataclass(frozen=True)
class ValidationConfig:
    n_boot: int = 1000
    n_mc: int = 10000
    level: float = 0.95
    seed: int = 0
    k_sigma: float = 3.0
    # declared generative law; None means unknown, which triggers the sensitivity gate
    dist: GenerativeSpec | None = None
    candidates: tuple[GenerativeSpec, ...] = (GenerativeSpec.normal(), GenerativeSpec.student(6.0))
    precision_ratio: float = 0.1
    workers: int = 1


@dataclass(frozen=True)
class ZetaScore:
    scheme: Scheme
    theta_est: float
    theta_ref: float
    interval: IntervalEstimate
    zeta: float | None
    valid: bool | None
    centering: Centering = Centering.ON_ESTIMATE
    reference_se: float | None = None


def _score(scheme, est, ref, interval, centering, ref_se=None, strict=True) -> ZetaScore:
    try:
        z = zeta(est, ref, interval, centering)
    except IndeterminateZeta:
        if strict:
            raise
        return ZetaScore(scheme, est, ref, interval, None, None, Centering(centering), ref_se)
    return ZetaScore(scheme, est, ref, interval, z, abs(z) <= 1.0, Centering(centering), ref_se)


def _boot_seed(config: ValidationConfig, stat: Statistic) -> int:
    return substream(config.seed, "boot", stat.name)


def _mc_seed(config: ValidationConfig, stat: Statistic, d: GenerativeSpec) -> int:
    return substream(config.seed, "mc", stat.name, str(d))


def bootstrap_interval(sample: PairedSample, stat: Statistic,
                       config: ValidationConfig) -> IntervalEstimate:
    return bootstrap_ci(sample, stat, config.n_boot, config.level, _boot_seed(config, stat),
                        workers=config.workers)


def reference_for(sample: PairedSample, stat: Statistic, d: GenerativeSpec,
                  config: ValidationConfig) -> SimulatedReference:
    return simulate_reference(sample, stat, d, config.n_mc, _mc_seed(config, stat, d),
                              level=config.level, workers=config.workers)


def zeta_bs(sample: PairedSample, stat: Statistic, config: ValidationConfig = ValidationConfig(),
            interval: IntervalEstimate | None = None, *, strict: bool = True) -> ZetaScore:
    """Benchmark score: predefined reference with a bootstrap interval.

    With ``strict=False`` an indeterminate zeta is reported as ``None``
    instead of raising.
    """
    ref = stat.predefined_reference(sample)
    if ref is None:
        raise NoPredefinedReference(f"{stat.name} has no predefined reference value")
    interval = interval or bootstrap_interval(sample, stat, config)
    return _score(Scheme.BS, interval.point, ref, interval, Centering.ON_ESTIMATE, strict=strict)


def zeta_sim(sample: PairedSample, stat: Statistic, d: GenerativeSpec,
             config: ValidationConfig = ValidationConfig(),
             interval: IntervalEstimate | None = None,
             reference: SimulatedReference | None = None, *, strict: bool = True) -> ZetaScore:
    """Simulated reference against the bootstrap interval of the estimate."""
    interval = interval or bootstrap_interval(sample, stat, config)
    reference = reference or reference_for(sample, stat, d, config)
    check_precision(reference, interval, config.precision_ratio)
    return _score(Scheme.sim(d), interval.point, reference.mean, interval,
                  Centering.ON_ESTIMATE, reference.standard_error, strict)


def zeta_sim2(sample: PairedSample, stat: Statistic, d: GenerativeSpec,
              config: ValidationConfig = ValidationConfig(),
              reference: SimulatedReference | None = None,
              theta_est: float | None = None, *, strict: bool = True) -> ZetaScore:
    """Simulated reference against the Monte Carlo quantile interval."""
    reference = reference or reference_for(sample, stat, d, config)
    est = stat(sample) if theta_est is None else theta_est
    return _score(Scheme.sim(d, two=True), est, reference.mean, reference.interval,
                  Centering.ON_REFERENCE, reference.standard_error, strict)


@dataclass(frozen=True)
class SensitivityGate:
    references: tuple[ReferenceSummary, ...]
    k_sigma: float
    max_deviation: float  # largest pairwise |difference| / combined standard error
    over_sensitive: bool

    @property
    def theta_n(self) -> float:
        return self.references[0].mean

    @property
    def theta_t(self) -> float:
        return self.references[-1].mean


def gate_from_references(refs: Sequence[SimulatedReference | ReferenceSummary],
                         k_sigma: float = 3.0) -> SensitivityGate:
    worst = 0.0
    for i in range(len(refs)):
        for j in range(i + 1, len(refs)):
            diff = abs(refs[i].mean - refs[j].mean)
            se = math.hypot(refs[i].standard_error, refs[j].standard_error)
            if diff == 0.0:
                dev = 0.0
            else:
                dev = diff / se if se > 0 else math.inf
            worst = max(worst, dev)
    summaries = tuple(r.summary() if isinstance(r, SimulatedReference) else r for r in refs)
    return SensitivityGate(summaries, k_sigma, worst, worst > k_sigma)


def sensitivity_gate(uncertainties, stat: Statistic,
                     config: ValidationConfig = ValidationConfig()) -> SensitivityGate:
    """Compare simulated references under the candidate generative laws."""
    sample = (uncertainties if isinstance(uncertainties, PairedSample)
              else PairedSample(np.zeros(len(uncertainties)), uncertainties))
    refs = [reference_for(sample, stat, d, config) for d in config.candidates]
    return gate_from_references(refs, config.k_sigma)


@dataclass(frozen=True)
class ValidationReport:
    statistic: Statistic
    theta_est: float | None
    zeta_scores: list[ZetaScore]
    sensitivity_gate: SensitivityGate | None
    verdict: Verdict
    references: list[ReferenceSummary] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def screen(sample: PairedSample) -> tuple[dict[str, float | None], list[str]]:
    """Robust skewness of u^2, E^2, Z^2 and the warnings for exceeded limits."""
    values = {}
    messages = []
    for name, x, limit in (
        ("u2", sample.uncertainties**2, BETA_GM_LIMIT_U2),
        ("E2", sample.errors**2, BETA_GM_LIMIT_E2),
        ("Z2", z_scores(sample) ** 2, BETA_GM_LIMIT_E2),
    ):
        try:
            b = beta_gm(x)
        except UQCalError:
            values[name] = None
            continue
        values[name] = b
        if b > limit:
            messages.append(f"beta_GM({name}) = {b:.3f} exceeds safety limit {limit}")
    return values, messages


def _verdict(scores: Sequence[ZetaScore]) -> Verdict:
    if not scores or any(s.valid is None for s in scores):
        return Verdict.INDETERMINATE
    if all(s.valid for s in scores):
        return Verdict.VALIDATED
    if not any(s.valid for s in scores):
        return Verdict.REJECTED
    return Verdict.CANNOT_VALIDATE


def _try(messages: list[str], fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except UQCalError as exc:
        messages.append(f"{type(exc).__name__}: {exc}")
        return None


def validate(sample: PairedSample, stat: Statistic,
             config: ValidationConfig = ValidationConfig()) -> ValidationReport:
    """Route a statistic through the validation flowchart.

    Predefined reference: bootstrap benchmark score. Otherwise a declared
    generative law gives simulated-reference scores; with no declared law the
    references under the candidate laws must agree within ``k_sigma``
    combined standard errors before any verdict is issued.
    """
    notes: list[str] = []
    _, screening = screen(sample)
    for msg in screening:
        warnings.warn(msg, ScreeningWarning, stacklevel=2)
    notes.extend(screening)

    theta_est = _try(notes, stat, sample)
    if theta_est is None:
        return ValidationReport(stat, None, [], None, Verdict.INDETERMINATE, [], notes)

    interval = _try(notes, bootstrap_interval, sample, stat, config)

    if stat.predefined_reference(sample) is not None:
        score = _try(notes, zeta_bs, sample, stat, config, interval, strict=False) if interval else None
        scores = [score] if score else []
        return ValidationReport(stat, theta_est, scores, None, _verdict(scores), [], notes)

    laws = (config.dist,) if config.dist is not None else config.candidates
    refs = [_try(notes, reference_for, sample, stat, d, config) for d in laws]
    if any(r is None for r in refs):
        return ValidationReport(stat, theta_est, [], None, Verdict.INDETERMINATE, [], notes)

    sim_scores: list[ZetaScore] = []
    all_scores: list[ZetaScore] = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for d, ref in zip(laws, refs):
            if interval is not None:
                s = _try(notes, zeta_sim, sample, stat, d, config, interval, ref, strict=False)
                if s is not None:
                    sim_scores.append(s)
                    all_scores.append(s)
            s2 = _try(notes, zeta_sim2, sample, stat, d, config, ref, theta_est, strict=False)
            if s2 is not None:
                all_scores.append(s2)
    notes.extend(str(w.message) for w in caught)

    gate = None
    if config.dist is None:
        gate = gate_from_references(refs, config.k_sigma)
    summaries = [r.summary() for r in refs]
    if gate is not None and gate.over_sensitive:
        verdict = Verdict.CANNOT_VALIDATE
    elif interval is None or len(sim_scores) < len(laws):
        verdict = Verdict.INDETERMINATE
    else:
        verdict = _verdict(sim_scores)
    return ValidationReport(stat, theta_est, all_scores, gate, verdict, summaries, notes)


@dataclass(frozen=True)
class NuScanPoint:
    nu: float | None  # None for the normal law
    mean: float
    standard_error: float


def scan_nu(uncertainties, stat: Statistic, nu_grid: Sequence[float] = tuple(range(3, 21)),
            n_mc: int = 10000, seed: int = 0, *, include_normal: bool = False,
            workers: int = 1) -> list[NuScanPoint]:
    """Simulated reference of ``stat`` under t_s(nu) for each nu of the grid."""
    sample = (uncertainties if isinstance(uncertainties, PairedSample)
              else PairedSample(np.zeros(len(uncertainties)), uncertainties))
    laws: list[tuple[float | None, GenerativeSpec]] = [
        (float(nu), GenerativeSpec.student(nu)) for nu in nu_grid
    ]
    if include_normal:
        laws.append((None, GenerativeSpec.normal()))
    out = []
    for nu, d in laws:
        ref = simulate_reference(sample, stat, d, n_mc, substream(seed, "scan-nu", str(d)),
                                 workers=workers)
        out.append(NuScanPoint(nu, ref.mean, ref.standard_error))
    return out


@dataclass(frozen=True)
class DatasetScanPoint:
    index: int
    size: int
    mean: float
    standard_error: float
    corrected: float  # mean * sqrt(M)
    corrected_se: float


def scan_datasets(samples: Sequence[PairedSample], stat: Statistic, d: GenerativeSpec,
                  n_mc: int = 10000, seed: int = 0, *, workers: int = 1) -> list[DatasetScanPoint]:
    """Simulated references across datasets, raw and scaled by sqrt(M).

    Every dataset uses the same seed so identical uncertainty sets give
    identical references.
    """
    out = []
    for i, s in enumerate(samples):
        ref = simulate_reference(s, stat, d, n_mc, substream(seed, "scan-datasets"), workers=workers)
        root_m = math.sqrt(s.size)
        out.append(DatasetScanPoint(i, s.size, ref.mean, ref.standard_error,
                                    ref.mean * root_m, ref.standard_error * root_m))
    return out


@dataclass(frozen=True)
class DesignPoint:
    M: int
    N: int
    nu: float
    mean: float
    standard_error: float

    @property
    def x(self) -> float:
        return math.sqrt(self.N / self.M)


@dataclass(frozen=True)
class ScalingFit:
    statistic: str
    model: str
    design_points: list[DesignPoint]
    slope: float
    slope_se: float
    intercept: float
    intercept_interval: IntervalEstimate | None
    fit_through_origin: bool
    beta: float | None  # exponent of M in theta = alpha * M**beta * N**0.5; None with one M
    beta_se: float | None
    residuals: list[float]
    chi2_dof: float
    rel_se_median: float


def _scaling_point(args) -> tuple[float, float, float, float]:
    kind, M, N, nu, n_mc, min_bin_size, seed = args
    model = SyntheticModelSpec(kind, nu, M)
    BinningConfig(N, min_bin_size).check(M)
    law = model.error_law
    bounds = (np.arange(N + 1, dtype=np.int64) * M) // N
    ence = np.empty(n_mc)
    zmse = np.empty(n_mc)
    for r in range(n_mc):
        rng = make_rng(derive_replicate_seed(seed, r))
        u = draw_uncertainties(rng, nu, M)
        e = u * law.draw(rng, M)
        order = np.argsort(u, kind="stable")
        bins = EqualCountBins(order, bounds)
        ence[r] = _ence_sorted(e[order], u[order], bins)
        zmse[r] = _zmse_sorted(e[order], u[order], bins)
    root = math.sqrt(n_mc)
    return (float(ence.mean()), float(ence.std(ddof=1)) / root,
            float(zmse.mean()), float(zmse.std(ddof=1)) / root)


def _wls(x: np.ndarray, y: np.ndarray, w: np.ndarray, intercept: bool):
    X = np.column_stack([np.ones_like(x), x]) if intercept else x[:, None]
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    resid = y - X @ coef
    dof = max(1, x.size - X.shape[1])
    chi2 = float(np.sum(w * resid**2)) / dof
    cov = np.linalg.inv((X * w[:, None]).T @ X) * chi2
    return coef, cov, resid, chi2, dof


def fit_scaling(points: Sequence[DesignPoint], statistic: str, model: str,
                through_origin: bool, level: float = 0.95) -> ScalingFit:
    """Weighted fit of theta against sqrt(N/M), plus the M exponent on log scale."""
    x = np.array([p.x for p in points])
    y = np.array([p.mean for p in points])
    se = np.array([p.standard_error for p in points])
    w = 1.0 / np.maximum(se, 1e-300) ** 2
    coef, cov, resid, chi2, dof = _wls(x, y, w, intercept=not through_origin)
    if through_origin:
        slope, slope_se, intercept, interval = float(coef[0]), math.sqrt(cov[0, 0]), 0.0, None
    else:
        intercept, slope = float(coef[0]), float(coef[1])
        slope_se = math.sqrt(cov[1, 1])
        half = float(sps.t.ppf(0.5 + level / 2, dof)) * math.sqrt(cov[0, 0])
        interval = IntervalEstimate(intercept, intercept - half, intercept + half, level,
                                    0.0, IntervalMethod.T_INTERVAL, x.size)
    # log(theta) - log(N)/2 = log(alpha) + beta * log(M)
    ly = np.log(y) - 0.5 * np.log([p.N for p in points])
    lm = np.log([p.M for p in points])
    lw = (y / np.maximum(se, 1e-300)) ** 2
    if np.unique(lm).size > 1:
        bcoef, bcov, *_ = _wls(lm, ly, lw, intercept=True)
        beta, beta_se = float(bcoef[1]), math.sqrt(bcov[1, 1])
    else:
        beta, beta_se = None, None
    return ScalingFit(statistic, model, list(points), slope, slope_se, intercept, interval,
                      through_origin, beta, beta_se, [float(r) for r in resid], chi2,
                      float(np.median(se / y)))


def scaling_study(model_kind: ModelKind | str, M_grid: Sequence[int] = DEFAULT_M_GRID,
                  N_grid: Sequence[int] = DEFAULT_N_GRID, nu_grid: Sequence[float] = DEFAULT_NU_GRID,
                  n_mc: int = 5000, seed: int = 0, *, through_origin: bool | None = None,
                  min_bin_size: int = 20, workers: int = 1) -> dict[str, ScalingFit]:
    """Simulated ENCE and ZMSE over an (M, N, nu) grid of synthetic calibrated sets.

    By default NIG fits go through the origin and T6IG fits carry an intercept.
    """
    kind = ModelKind(model_kind)
    if not (M_grid and N_grid and nu_grid):
        raise ValueError("grids must be non-empty")
    if through_origin is None:
        through_origin = kind is ModelKind.NIG
    grid = [(int(M), int(N), float(nu)) for M in M_grid for N in N_grid for nu in nu_grid]
    tasks = [(kind, M, N, nu, int(n_mc), min_bin_size, derive_replicate_seed(seed, g))
             for g, (M, N, nu) in enumerate(grid)]
    results = run_chunks(_scaling_point, tasks, workers)
    ence_pts = [DesignPoint(M, N, nu, r[0], r[1]) for (M, N, nu), r in zip(grid, results)]
    zmse_pts = [DesignPoint(M, N, nu, r[2], r[3]) for (M, N, nu), r in zip(grid, results)]
    return {
        "ENCE": fit_scaling(ence_pts, "ENCE", kind.value, through_origin),
        "ZMSE": fit_scaling(zmse_pts, "ZMSE", kind.value, through_origin),
    }


@dataclass(frozen=True)
class ReferenceLine:
    model: str
    intercept: float
    slope: float


@dataclass(frozen=True)
class Extrapolation:
    statistic: str
    M: int
    n_bins: list[int]
    x: list[float]
    values: list[float]
    fit_min_bins: int
    intercept: float
    slope: float
    intercept_interval: IntervalEstimate
    ols_intercept_interval: IntervalEstimate
    consistent: bool
    reference_lines: list[ReferenceLine]


def _curve(e: np.ndarray, u: np.ndarray, n_list: Sequence[int], kind: StatKind) -> np.ndarray:
    m = u.size
    order = np.argsort(u, kind="stable")
    es, us = e[order], u[order]
    kernel = _ence_sorted if kind is StatKind.ENCE else _zmse_sorted
    out = np.empty(len(n_list))
    for j, n in enumerate(n_list):
        out[j] = kernel(es, us, EqualCountBins(order, (np.arange(n + 1, dtype=np.int64) * m) // n))
    return out


def _ols_intercept(x: np.ndarray, y: np.ndarray) -> float:
    X = np.column_stack([np.ones_like(x), x])
    return float(np.linalg.lstsq(X, y, rcond=None)[0][0])


def _extrap_chunk(args) -> np.ndarray:
    e, u, n_fit, x_fit, kind, seeds = args
    m = u.size
    out = np.empty(len(seeds))
    for k, s in enumerate(seeds):
        idx = make_rng(s).integers(0, m, m)
        out[k] = _ols_intercept(x_fit, _curve(e[idx], u[idx], n_fit, kind))
    return out


def extrapolate_to_zero_bins(sample: PairedSample, stat: StatKind | str = StatKind.ZMSE,
                             n_range: Sequence[int] = range(10, 151), min_bin_size: int = 20,
                             fit_above: int = 20, level: float = 0.95, *,
                             interval: str = "bootstrap", n_boot: int = 200, seed: int = 0,
                             workers: int = 1) -> Extrapolation:
    """Fit the binned statistic against sqrt(N/M) and test the intercept against zero.

    Bins are along the uncertainty. ``interval="bootstrap"`` takes a
    percentile interval of the intercept over paired resamples of the whole
    dataset; ``"ols"`` uses the regression t-interval, which ignores the
    strong correlation between values computed on the same data and is
    kept as a diagnostic.
    """
    kind = StatKind(stat.lower() if isinstance(stat, str) else stat)
    if kind not in (StatKind.ENCE, StatKind.ZMSE):
        raise InvalidStatistic("extrapolation applies to ENCE or ZMSE")
    m = sample.size
    n_all = [int(n) for n in n_range if 1 <= n <= m and m // n >= min_bin_size]
    n_fit = [n for n in n_all if n > fit_above]
    if not n_all or len(n_fit) < 3:
        raise InsufficientBins(
            f"M={m}: {len(n_all)} admissible bin counts, {len(n_fit)} above {fit_above}"
        )
    e, u = sample.errors, sample.uncertainties
    values = _curve(e, u, n_all, kind)
    x_all = np.sqrt(np.array(n_all) / m)
    mask = np.array(n_all) > fit_above
    x_fit, y_fit = x_all[mask], values[mask]

    fit = sps.linregress(x_fit, y_fit)
    dof = x_fit.size - 2
    half = float(sps.t.ppf(0.5 + level / 2, dof)) * fit.intercept_stderr
    ols = IntervalEstimate(float(fit.intercept), float(fit.intercept) - half,
                           float(fit.intercept) + half, level, 0.0,
                           IntervalMethod.T_INTERVAL, x_fit.size)
    if interval == "ols":
        chosen = ols
    elif interval == "bootstrap":
        seeds = replicate_seeds(substream(seed, "extrapolate", kind.value), n_boot)
        tasks = [(e, u, n_fit, x_fit, kind, chunk) for _, chunk in split_seeds(seeds, workers)]
        reps = np.concatenate(run_chunks(_extrap_chunk, tasks, workers))
        alpha = 0.5 * (1.0 - level)
        lo, hi = np.quantile(reps, [alpha, 1.0 - alpha])
        chosen = IntervalEstimate(float(fit.intercept), float(lo), float(hi), level,
                                  float(reps.mean() - fit.intercept),
                                  IntervalMethod.PERCENTILE, n_boot)
    else:
        raise ValueError(f"unknown interval method {interval!r}")
    lines = [ReferenceLine(model, *REFERENCE_LINES[(model, kind.value)]) for model in ("nig", "t6ig")]
    return Extrapolation(kind.name, m, n_all, [float(v) for v in x_all], [float(v) for v in values],
                         fit_above, float(fit.intercept), float(fit.slope), chosen, ols,
                         chosen.contains(0.0), lines)
