from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from uqcal.errors import InvalidSample
from uqcal.generative import (
    GenerativeSpec,
    SyntheticModelSpec,
    fit_student,
    fit_student_z,
    gen_synthetic,
    sample_unit,
    student_loglik,
    synth_errors,
)
from uqcal.stats import PairedSample


def test_parse_and_label():
    assert GenerativeSpec.parse("normal") == GenerativeSpec.normal()
    assert GenerativeSpec.parse("t6") == GenerativeSpec.student(6)
    assert GenerativeSpec.parse("t:4.5").nu == 4.5
    assert GenerativeSpec.student(6).label == "T"
    assert str(GenerativeSpec.student(6)) == "t:6"
    with pytest.raises(ValueError):
        GenerativeSpec.parse("cauchy")
    with pytest.raises(ValueError):
        GenerativeSpec.student(2.0)


def test_fitted_nu_clamped():
    with pytest.warns(RuntimeWarning):
        d = GenerativeSpec.from_fitted_nu(1.5)
    assert d.nu == 2.1


@pytest.mark.parametrize("d", [GenerativeSpec.normal(), GenerativeSpec.student(6)])
def test_unit_variance(d):
    n = 10**6
    x = sample_unit(d, n, 123)
    # standard error of a sample variance: sqrt((kurtosis - 1)/n); t(6) has kurtosis 6
    kurt = 3.0 if d.nu is None else 3 + 6 / (d.nu - 4)
    assert abs(x.var() - 1) < 3 * math.sqrt((kurt - 1) / n)


def test_scaled_t_matches_scipy_law():
    # oracle: scipy's t(6) with scale sqrt(4/6)
    x = sample_unit(GenerativeSpec.student(6), 20000, 5)
    assert sps.kstest(x, sps.t(6, scale=math.sqrt(4 / 6)).cdf).pvalue > 1e-3


def test_sample_unit_deterministic():
    d = GenerativeSpec.student(4.5)
    assert np.array_equal(sample_unit(d, 100, 9), sample_unit(d, 100, 9))
    assert not np.array_equal(sample_unit(d, 100, 9), sample_unit(d, 100, 10))


def test_synth_errors_scaling():
    d = GenerativeSpec.normal()
    assert np.array_equal(synth_errors(np.ones(50), d, 4), sample_unit(d, 50, 4))
    x = synth_errors(np.full(10**5, 2.0), d, 4)
    assert abs(x.var() - 4) < 3 * 4 * math.sqrt(2 / 10**5)
    with pytest.raises(InvalidSample):
        synth_errors([1.0, 0.0], d, 1)


def test_calibrated_synth_zms_mean_one():
    rng = np.random.default_rng(0)
    u = rng.uniform(0.1, 3, 200)
    vals = [np.mean((synth_errors(u, GenerativeSpec.student(5), s) / u) ** 2) for s in range(2000)]
    assert abs(np.mean(vals) - 1) < 3 * np.std(vals) / math.sqrt(len(vals))


def test_nig_moments():
    nu, m = 6.0, 10**5
    s = gen_synthetic(SyntheticModelSpec("nig", nu, m), 2024)
    target = nu / (nu - 2)
    u2, e2 = s.uncertainties**2, s.errors**2
    assert abs(u2.mean() - target) < 3 * u2.std(ddof=1) / math.sqrt(m)
    assert abs(e2.mean() - target) < 3 * e2.std(ddof=1) / math.sqrt(m)


def test_nig_errors_marginally_student():
    s = gen_synthetic(SyntheticModelSpec("nig", 6, 20000), 8)
    assert sps.kstest(s.errors, sps.t(6).cdf).pvalue > 1e-3


def test_gen_synthetic_deterministic():
    spec = SyntheticModelSpec("t6ig", 4, 500)
    assert gen_synthetic(spec, 3) == gen_synthetic(spec, 3)


def test_fit_recovers_t6():
    z = sample_unit(GenerativeSpec.student(6), 5000, 17)
    f = fit_student_z(PairedSample(z, np.ones_like(z)))
    assert f.converged
    assert 4.5 <= f.nu <= 8.0
    assert abs(f.mu) < 0.05


def test_fit_normal_plateau():
    z = sample_unit(GenerativeSpec.normal(), 5000, 21)
    assert fit_student(z).nu > 20


def test_fit_bias_percent():
    z = sample_unit(GenerativeSpec.normal(), 5000, 22) + 0.5
    f = fit_student(z)
    assert f.b == pytest.approx(100 * f.mu / f.sigma)
    assert f.b == pytest.approx(50, abs=5)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=10, deadline=None)
def test_fit_is_a_maximum(seed):
    x = sample_unit(GenerativeSpec.student(5), 400, seed)
    f = fit_student(x)
    true_ll = student_loglik(x, 0.0, math.sqrt(3 / 5), 5.0)
    assert f.loglik >= true_ll - 1e-6


def test_loglik_matches_scipy():
    x = np.linspace(-3, 3, 31)
    assert student_loglik(x, 0.2, 1.3, 4.0) == pytest.approx(
        sps.t.logpdf(x, 4.0, loc=0.2, scale=1.3).sum(), rel=1e-12)


def test_fit_needs_data():
    with pytest.raises(InvalidSample):
        fit_student(np.arange(10.0))
