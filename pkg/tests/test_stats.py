from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from uqcal.errors import BinTooSmall, DegenerateRanks, InvalidSample, TooManyBins, ZeroBinZMS
from uqcal.stats import (
    BinningConfig,
    PairedSample,
    Statistic,
    beta_gm,
    binned_rce,
    binned_zms,
    compute,
    ence,
    equal_count_bins,
    nll,
    nll_ref,
    rce,
    spearman_cc,
    z_scores,
    zms,
    zmse,
)

LOG_2PI = math.log(2 * math.pi)


def bins(n, min_size=1):
    return BinningConfig(n, min_size)


def test_z_scores_examples():
    assert z_scores(PairedSample([1, -2, 3], [1, 2, 3])).tolist() == [1, -1, 1]
    u = np.array([0.3, 1.7, 2.2])
    assert np.all(z_scores(PairedSample(u, u)) == 1)
    assert z_scores(PairedSample([0, 0], [5, 7])).tolist() == [0, 0]


def test_sample_validation():
    with pytest.raises(InvalidSample):
        PairedSample([1, 2], [1, 0])
    with pytest.raises(InvalidSample):
        PairedSample([1, 2], [1, np.inf])
    with pytest.raises(InvalidSample):
        PairedSample([np.nan, 2], [1, 1])
    with pytest.raises(InvalidSample):
        PairedSample([1, 2, 3], [1, 1])
    s = PairedSample([1, 2], [1, 1])
    with pytest.raises(ValueError):
        s.errors[0] = 5


def test_zms_examples():
    u = np.array([0.5, 1.0, 3.0])
    assert zms(PairedSample(u, u)) == 1.0
    assert zms(PairedSample(2 * u, u)) == 4.0
    assert zms(PairedSample([1, -2, 3], [1, 1, 1])) == pytest.approx(14 / 3, rel=1e-15)


def test_rce_examples():
    u = np.array([0.5, 1.0, 3.0])
    assert rce(PairedSample(u, u)) == 0.0
    assert rce(PairedSample(2 * u, u)) == pytest.approx(-1.0, abs=1e-15)
    assert rce(PairedSample([0, math.sqrt(2)], [1, 1])) == pytest.approx(0.0, abs=1e-15)


def test_spearman_examples():
    u = np.arange(1.0, 11.0)
    assert spearman_cc(PairedSample(u**2, u)) == pytest.approx(1.0)
    assert spearman_cc(PairedSample(-1.0 / u, u)) == pytest.approx(-1.0)
    with pytest.raises(DegenerateRanks):
        spearman_cc(PairedSample(u, np.ones(10)))


@given(st.lists(st.tuples(st.integers(-5, 5), st.integers(1, 4)), min_size=5, max_size=40))
def test_spearman_matches_scipy_with_ties(pairs):
    e = np.array([p[0] for p in pairs], float)
    u = np.array([p[1] for p in pairs], float)
    s = PairedSample(e, u)
    if np.ptp(u) == 0 or np.ptp(np.abs(e)) == 0:
        with pytest.raises(DegenerateRanks):
            spearman_cc(s)
        return
    assert spearman_cc(s) == pytest.approx(sps.spearmanr(np.abs(e), u).statistic, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_spearman_invariant_under_monotone_transform(seed):
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.1, 3, 50)
    e = rng.normal(size=50) * u
    base = spearman_cc(PairedSample(e, u))
    assert spearman_cc(PairedSample(e**3, np.exp(u))) == pytest.approx(base, abs=1e-12)


def test_equal_count_bins_examples():
    assert equal_count_bins(np.arange(10.0), 5).sizes.tolist() == [2] * 5
    assert equal_count_bins(np.arange(10.0), 3).sizes.tolist() == [3, 3, 4]
    b = equal_count_bins([3, 1, 2, 0], 4)
    assert [b.indices(k).tolist() for k in range(4)] == [[3], [1], [2], [0]]
    with pytest.raises(TooManyBins):
        equal_count_bins([1.0, 2.0], 3)


@given(st.integers(1, 300), st.integers(1, 300), st.integers(0, 1000))
def test_equal_count_bins_partition(m, n, seed):
    if n > m:
        return
    key = np.random.default_rng(seed).integers(0, 5, m).astype(float)
    b = equal_count_bins(key, n)
    assert sorted(np.concatenate([b.indices(k) for k in range(n)]).tolist()) == list(range(m))
    assert b.sizes.max() - b.sizes.min() <= 1
    # bins follow the key order
    keys = [key[b.indices(k)] for k in range(n)]
    assert all(keys[k].max() <= keys[k + 1].min() for k in range(n - 1))


def test_ence_examples():
    rng = np.random.default_rng(0)
    u = rng.uniform(0.5, 2, 60)
    assert ence(PairedSample(u, u), bins(6)) == 0.0
    s = PairedSample(rng.normal(size=60) * u, u)
    assert ence(s, bins(1)) == pytest.approx(abs(rce(s)), rel=1e-12)


def test_ence_two_bins_by_hand():
    # bin 1: u=1, E^2 mean 0.64 -> RCE 0.2; bin 2: u=2, E^2 mean 4*1.96 -> RCE -0.4
    u = np.array([1.0, 1.0, 2.0, 2.0])
    e = np.array([0.8, -0.8, 2.8, -2.8])
    assert ence(PairedSample(e, u), bins(2)) == pytest.approx(0.3, abs=1e-12)
    assert binned_rce(PairedSample(e, u), bins(2)) == pytest.approx([0.2, -0.4], abs=1e-12)


def test_zmse_examples():
    u = np.array([1.0, 1.0, 2.0, 2.0])
    assert zmse(PairedSample(u, u), bins(2)) == 0.0
    e = np.array([math.sqrt(math.e), math.sqrt(math.e), 2.0, 2.0])
    assert zmse(PairedSample(e, u), bins(2)) == pytest.approx(0.5, abs=1e-12)
    e = np.array([math.sqrt(2), math.sqrt(2), 2 * math.sqrt(0.5), 2 * math.sqrt(0.5)])
    assert binned_zms(PairedSample(e, u), bins(2)) == pytest.approx([2, 0.5])
    assert zmse(PairedSample(e, u), bins(2)) == pytest.approx(math.log(2), abs=1e-12)


def test_zmse_zero_bin():
    with pytest.raises(ZeroBinZMS):
        zmse(PairedSample([0.0, 0.0, 1.0, 1.0], [1, 1, 2, 2]), bins(2))


def test_min_bin_size_enforced():
    s = PairedSample(np.ones(100), np.ones(100))
    with pytest.raises(BinTooSmall):
        ence(s, BinningConfig(6, 20))
    assert ence(s, BinningConfig(5, 20)) == 0.0


def test_feature_binning():
    u = np.array([1.0, 2.0, 1.0, 2.0])
    e = np.array([1.0, 2.0, 2.0, 4.0])
    feat = np.array([0.0, 0.0, 1.0, 1.0])
    s = PairedSample(e, u, feat, ("x",))
    # binned on x: first bin calibrated, second has E = 2u
    assert ence(s, BinningConfig(2, 1, variable=0)) == pytest.approx(0.5)
    assert ence(s, BinningConfig(2, 1)) == pytest.approx(ence(PairedSample(e, u), bins(2)))


def ence_oracle(e, u, n):
    # independent loop implementation over an explicit sorted partition
    idx = sorted(range(len(u)), key=lambda i: (u[i], i))
    m = len(u)
    total = 0.0
    for k in range(n):
        part = idx[k * m // n:(k + 1) * m // n]
        mse = sum(e[i] ** 2 for i in part) / len(part)
        mv = sum(u[i] ** 2 for i in part) / len(part)
        total += abs(1 - math.sqrt(mse) / math.sqrt(mv))
    return total / n


@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
@settings(max_examples=40)
def test_ence_matches_loop_oracle(seed, n):
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.1, 2, 37)
    e = rng.normal(size=37) * u
    assert ence(PairedSample(e, u), bins(n)) == pytest.approx(ence_oracle(e, u, n), rel=1e-10)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
@settings(max_examples=40)
def test_scale_properties(seed, c):
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.1, 2, 40)
    e = rng.normal(size=40) * u
    s = PairedSample(e, u)
    assert zms(PairedSample(c * e, u)) == pytest.approx(c * c * zms(s), rel=1e-10)
    # joint rescaling of E and u leaves every z-score statistic unchanged
    su = PairedSample(c * e, c * u)
    assert zms(su) == pytest.approx(zms(s), rel=1e-10)
    assert ence(su, bins(4)) == pytest.approx(ence(s, bins(4)), rel=1e-9, abs=1e-12)
    assert zmse(su, bins(4)) == pytest.approx(zmse(s, bins(4)), rel=1e-9, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.1, 2, 40)
    e = rng.normal(size=40) * u
    p = rng.permutation(40)
    a, b = PairedSample(e, u), PairedSample(e[p], u[p])
    for name in ("zms", "rce", "cc", "nll"):
        assert compute(Statistic.of(name), a) == pytest.approx(compute(Statistic.of(name), b), rel=1e-12)


def test_nll_examples():
    u = np.ones(5)
    assert nll(PairedSample(u, u)) == pytest.approx(0.5 * (1 + LOG_2PI), abs=1e-12)
    assert nll(PairedSample(u, u)) == pytest.approx(1.41894, abs=1e-5)
    assert nll_ref(PairedSample(np.zeros(5), u)) == pytest.approx(1.41894, abs=1e-5)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_nll_identity(seed):
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.1, 3, 30)
    s = PairedSample(rng.normal(size=30) * u * 1.3, u)
    assert nll(s) - nll_ref(s) == pytest.approx(0.5 * (zms(s) - 1), abs=1e-12)
    # oracle: mean of the Gaussian negative log-density
    direct = -np.mean(sps.norm.logpdf(s.errors, scale=u))
    assert nll(s) == pytest.approx(direct, rel=1e-12)


def test_beta_gm_examples():
    assert beta_gm([-1, 0, 1]) == 0.0
    assert beta_gm([0, 0, 0, 10]) > 0
    rng = np.random.default_rng(3)
    u2 = 1.0 / rng.gamma(3, 1 / 3, 20000)
    assert 0 < beta_gm(u2) < 1


@given(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=50))
def test_beta_gm_bounded_and_odd(xs):
    x = np.array(xs)
    if np.mean(np.abs(x - np.median(x))) == 0:
        return
    b = beta_gm(x)
    assert -1 <= b <= 1
    assert beta_gm(-x) == pytest.approx(-b, abs=1e-9)


def test_statistic_prepare_matches_compute():
    rng = np.random.default_rng(11)
    u = rng.uniform(0.2, 2, 400)
    e = rng.normal(size=400) * u
    s = PairedSample(e, u)
    for name in ("zms", "rce", "cc", "nll", "ence", "zmse"):
        stat = Statistic.of(name, n_bins=10)
        assert stat.prepare(s)(e) == pytest.approx(compute(stat, s), rel=1e-12)
