"""Unit-variance generative laws, synthetic calibrated datasets and z-score fits."""

from __future__ import annotations

import enum
import logging
import math
import re
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from .errors import InvalidSample, NonConvergence
from .stats import PairedSample, z_scores

logger = logging.getLogger(__name__)

SEED_MASK = (1 << 64) - 1
NU_FLOOR = 2.1
# t(nu) is indistinguishable from normal well before this; bounds the plateau
NU_CAP = 1e4
LOG_NU_CAP = math.log(NU_CAP)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & SEED_MASK)


class DistKind(str, enum.Enum):
    NORMAL = "normal"
    STUDENT = "student-t"


@dataclass(frozen=True)
class GenerativeSpec:
    """Zero-mean, unit-variance law D for eps in E = u * eps."""

    kind: DistKind = DistKind.NORMAL
    nu: float | None = None

    def __post_init__(self):
        kind = DistKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is DistKind.NORMAL:
            if self.nu is not None:
                raise ValueError("a normal generative law takes no nu")
        else:
            if self.nu is None or not math.isfinite(self.nu) or self.nu <= 2:
                raise ValueError(f"scaled Student-t needs finite nu > 2, got {self.nu}")
            object.__setattr__(self, "nu", float(self.nu))

    @classmethod
    def normal(cls) -> GenerativeSpec:
        return cls(DistKind.NORMAL)

    @classmethod
    def student(cls, nu: float) -> GenerativeSpec:
        return cls(DistKind.STUDENT, nu)

    @classmethod
    def from_fitted_nu(cls, nu: float) -> GenerativeSpec:
        """Student-t law for a fitted nu, raising nu <= 2 to 2.1."""
        if nu <= 2:
            warnings.warn(
                f"fitted nu={nu:g} has infinite variance; using nu={NU_FLOOR}",
                RuntimeWarning,
                stacklevel=2,
            )
            nu = NU_FLOOR
        return cls.student(nu)

    @classmethod
    def parse(cls, text: str) -> GenerativeSpec:
        """Parse ``normal``, ``t6`` or ``t:<nu>``."""
        s = text.strip().lower()
        if s in ("normal", "n", "gauss", "gaussian"):
            return cls.normal()
        m = re.fullmatch(r"t:?([0-9]*\.?[0-9]+(?:e[+-]?\d+)?)", s)
        if m:
            return cls.student(float(m.group(1)))
        raise ValueError(f"unknown generative distribution {text!r}")

    @property
    def label(self) -> str:
        """Scheme suffix: N for normal, T for Student-t."""
        return "N" if self.kind is DistKind.NORMAL else "T"

    def __str__(self) -> str:
        return "normal" if self.kind is DistKind.NORMAL else f"t:{self.nu:g}"

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind is DistKind.NORMAL:
            return rng.standard_normal(n)
        nu = self.nu
        return rng.standard_t(nu, n) / math.sqrt(nu / (nu - 2.0))


def sample_unit(d: GenerativeSpec, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. unit-variance draws from ``d``; a pure function of the seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return d.draw(make_rng(seed), n)


def synth_errors(uncertainties, d: GenerativeSpec, seed: int) -> np.ndarray:
    u = np.asarray(uncertainties, dtype=float)
    if np.any(~(u > 0)):
        raise InvalidSample("uncertainties must be positive")
    return u * sample_unit(d, u.size, seed)


class ModelKind(str, enum.Enum):
    NIG = "nig"
    T6IG = "t6ig"


@dataclass(frozen=True)
class SyntheticModelSpec:
    """Calibrated synthetic model: u^2 ~ InvGamma(nu/2, nu/2), E = u * eps."""

    kind: ModelKind
    nu_uncertainty: float
    size: int

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if not self.nu_uncertainty > 2:
            raise ValueError("nu_uncertainty must be > 2")
        if int(self.size) < 2:
            raise ValueError("size must be >= 2")
        object.__setattr__(self, "nu_uncertainty", float(self.nu_uncertainty))
        object.__setattr__(self, "size", int(self.size))

    @property
    def error_law(self) -> GenerativeSpec:
        if self.kind is ModelKind.NIG:
            return GenerativeSpec.normal()
        return GenerativeSpec.student(6.0)


def draw_uncertainties(rng: np.random.Generator, nu: float, size: int) -> np.ndarray:
    # inverse gamma(shape=nu/2, rate=nu/2) as the reciprocal of gamma(nu/2, scale=2/nu)
    return 1.0 / np.sqrt(rng.gamma(nu / 2.0, 2.0 / nu, size))


def gen_synthetic(model: SyntheticModelSpec, seed: int) -> PairedSample:
    rng = make_rng(seed)
    u = draw_uncertainties(rng, model.nu_uncertainty, model.size)
    e = u * model.error_law.draw(rng, model.size)
    return PairedSample._trusted(e, u)


@dataclass(frozen=True)
class ZFit:
    """Maximum-likelihood location-scale Student-t fit of z-scores."""

    mu: float
    sigma: float
    nu: float
    b: float  # 100 * mu / sigma, in percent
    se_mu: float | None
    se_sigma: float | None
    loglik: float
    converged: bool
    n_iter: int


def student_loglik(x: np.ndarray, mu: float, sigma: float, nu: float) -> float:
    """Total log-likelihood of ``x`` under a location-scale Student-t."""
    r = (x - mu) / sigma
    n = x.size
    return float(
        n * (gammaln((nu + 1) / 2) - gammaln(nu / 2) - 0.5 * math.log(nu * math.pi) - math.log(sigma))
        - (nu + 1) / 2 * np.sum(np.log1p(r * r / nu))
    )


def _hessian(f, x: np.ndarray) -> np.ndarray:
    k = x.size
    h = 1e-4 * np.maximum(1.0, np.abs(x))
    out = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = h[i]
            ej[j] = h[j]
            v = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h[i] * h[j])
            out[i, j] = out[j, i] = v
    return out


def fit_student(values, *, max_restarts: int = 5, maxiter: int = 4000) -> ZFit:
    """Fit (mu, sigma, nu) by maximum likelihood with Nelder-Mead restarts.

    Optimizes over (mu, log sigma, log nu) starting from median, IQR/1.35
    and nu = 6.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size < 50:
        raise InvalidSample(f"student-t fit needs at least 50 values, got {x.size}")
    q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75])
    s0 = (q3 - q1) / 1.35
    if not s0 > 0:
        s0 = float(np.std(x)) or 1.0

    def nll(theta):
        mu, ls, lnu = theta
        if not (-50 < ls < 50 and -10 < lnu <= LOG_NU_CAP):
            return np.inf
        return -student_loglik(x, mu, math.exp(ls), math.exp(lnu))

    theta = np.array([med, math.log(s0), math.log(6.0)])
    best = nll(theta)
    n_iter = 0
    converged = False
    for _ in range(max_restarts):
        res = minimize(
            nll, theta, method="Nelder-Mead",
            options={"xatol": 1e-8, "fatol": 1e-8, "maxiter": maxiter, "maxfev": 2 * maxiter},
        )
        n_iter += int(res.nit)
        gain = best - res.fun
        if res.fun <= best:
            theta, best = res.x, float(res.fun)
        if res.success and gain < 1e-8:
            converged = True
            break
    if not converged:
        mu, ls, lnu = theta
        raise NonConvergence(
            f"student-t fit did not converge after {n_iter} iterations",
            last={"mu": float(mu), "sigma": math.exp(ls), "nu": math.exp(lnu), "loglik": -best},
        )
    mu, ls, lnu = (float(v) for v in theta)
    sigma, nu = math.exp(ls), math.exp(lnu)

    se_mu = se_sigma = None
    try:
        hess = _hessian(lambda p: -student_loglik(x, p[0], p[1], math.exp(p[2])),
                        np.array([mu, sigma, lnu]))
        cov = np.linalg.inv(hess)
        if cov[0, 0] > 0 and cov[1, 1] > 0:
            se_mu, se_sigma = math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1])
    except (np.linalg.LinAlgError, ValueError, OverflowError):
        logger.debug("Hessian not invertible at the optimum")
    return ZFit(mu, sigma, nu, 100.0 * mu / sigma, se_mu, se_sigma, -best, converged, n_iter)


def fit_student_z(sample: PairedSample, **kwargs) -> ZFit:
    """Student-t fit of the z-scores of ``sample``."""
    return fit_student(z_scores(sample), **kwargs)
