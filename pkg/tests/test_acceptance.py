"""Acceptance criteria, each at its stated tolerance.

Every test records a PASS/FAIL line that is echoed in the pytest terminal
summary. Set UQCAL_WORKERS to spread the heavier simulations over processes.
"""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from uqcal.cli import main
from uqcal.datasets import write_dataset
from uqcal.generative import GenerativeSpec, SyntheticModelSpec, fit_student_z, gen_synthetic, sample_unit
from uqcal.resampling import bootstrap_ci, default_workers, simulate_reference
from uqcal.stats import PairedSample, Statistic
from uqcal.validation import (
    Centering,
    ValidationConfig,
    Verdict,
    extrapolate_to_zero_bins,
    scaling_study,
    sensitivity_gate,
    validate,
    zeta,
)

pytestmark = pytest.mark.slow

SEED = 20240601
GRID = dict(M_grid=(2000, 8000, 16000), N_grid=(10, 30, 50), nu_grid=(6, 24), n_mc=1000)
WORKERS = default_workers()


def within(x, target, tol):
    return abs(x - target) <= tol


def test_c01_nig_scaling(record):
    fits = scaling_study("nig", **GRID, seed=SEED, workers=WORKERS)
    a, z = fits["ENCE"].slope, fits["ZMSE"].slope
    ok = within(a, 0.56, 0.02) and within(z, 1.14, 0.04)
    record(1, ok, f"NIG ENCE slope {a:.4f} (0.56+-0.02), ZMSE slope {z:.4f} (1.14+-0.04)")


def test_c02_t6ig_scaling(record):
    fits = scaling_study("t6ig", **GRID, seed=SEED, workers=WORKERS)
    e, z = fits["ENCE"], fits["ZMSE"]
    ok = (within(e.slope, 0.779, 0.05 * 0.779) and within(e.intercept, 0.004, 0.004)
          and within(z.slope, 1.577, 0.05 * 1.577) and within(z.intercept, 0.006, 0.004))
    record(2, ok, f"T6IG ENCE {e.intercept:.4f} + {e.slope:.4f}x, "
                  f"ZMSE {z.intercept:.4f} + {z.slope:.4f}x")


def test_c03_zms_reference_universality(record):
    u = gen_synthetic(SyntheticModelSpec("nig", 6, 5000), SEED).uncertainties
    laws = [GenerativeSpec.student(nu) for nu in (3, 4, 6, 12, 20)] + [GenerativeSpec.normal()]
    worst = 0.0
    parts = []
    for i, d in enumerate(laws):
        ref = simulate_reference(u, Statistic.of("zms"), d, 10**4, seed=SEED + i, workers=WORKERS)
        dev = abs(ref.mean - 1) / ref.standard_error
        worst = max(worst, dev)
        parts.append(f"{d}:{dev:.2f}")
    record(3, worst <= 3.0, f"max |ZMS_ref - 1|/u = {worst:.2f} (<= 3) [{' '.join(parts)}]")


def test_c04_zeta_arithmetic(record):
    z1 = zeta(0.96, 1.0, (0.87, 1.12), Centering.ON_ESTIMATE)
    z2 = zeta(0.244, 0.045, (0.030, 0.062), Centering.ON_REFERENCE)
    # -0.25 up to binary rounding of the decimal inputs
    ok = abs(z1 + 0.25) < 1e-12 and within(z2, 11.7, 0.1)
    record(4, ok, f"zeta_BS = {z1:.15g} (-0.25), zeta_Sim2 = {z2:.4f} (11.7+-0.1)")


def test_c05_nig_moments(record):
    s = gen_synthetic(SyntheticModelSpec("nig", 6, 10**5), SEED)
    e2, u2 = s.errors**2, s.uncertainties**2
    de = abs(e2.mean() - 1.5) / (e2.std(ddof=1) / math.sqrt(s.size))
    du = abs(u2.mean() - 1.5) / (u2.std(ddof=1) / math.sqrt(s.size))
    record(5, de <= 3 and du <= 3,
           f"mean(E^2)={e2.mean():.4f} ({de:.2f} se), mean(u^2)={u2.mean():.4f} ({du:.2f} se)")


def test_c06_bca_coverage(record):
    stat = Statistic.of("zms")
    covered = zeta_ok = 0
    n = 200
    for t in range(n):
        s = gen_synthetic(SyntheticModelSpec("nig", 6, 2000), SEED + 1000 + t)
        iv = bootstrap_ci(s, stat, 1000, 0.95, seed=SEED + t, workers=WORKERS)
        covered += iv.contains(1.0)
        zeta_ok += abs(zeta(iv.point, 1.0, iv)) <= 1.0
    c, zr = covered / n, zeta_ok / n
    ok = within(c, 0.95, 0.04) and within(zr, 0.95, 0.04)
    record(6, ok, f"BCa coverage {c:.3f}, |zeta_BS|<=1 rate {zr:.3f} (0.95+-0.04)")


def test_c07_sensitivity_gate(record):
    s = gen_synthetic(SyntheticModelSpec("nig", 6, 5000), SEED + 7)
    cfg = ValidationConfig(n_mc=10**4, seed=SEED, workers=WORKERS)
    rep = validate(s, Statistic.of("ence", 50), cfg)
    gate = rep.sensitivity_gate
    zms_gate = sensitivity_gate(s, Statistic.of("zms"), cfg)
    ok = (gate.over_sensitive and rep.verdict is Verdict.CANNOT_VALIDATE
          and not zms_gate.over_sensitive)
    record(7, ok, f"ENCE deviation {gate.max_deviation:.1f} sigma -> {rep.verdict.value}; "
                  f"ZMS deviation {zms_gate.max_deviation:.2f} sigma (gate k=3)")


def test_c08_extrapolation(record):
    n = 50
    contains = excludes = 0
    for t in range(n):
        s = gen_synthetic(SyntheticModelSpec("nig", 6, 5000), SEED + 2000 + t)
        contains += extrapolate_to_zero_bins(s, seed=SEED + t, workers=WORKERS).consistent
        e = s.errors.copy()
        top = s.uncertainties >= np.quantile(s.uncertainties, 0.75)
        e[top] *= 2.0
        bad = PairedSample(e, s.uncertainties)
        excludes += not extrapolate_to_zero_bins(bad, seed=SEED + t, workers=WORKERS).consistent
    ok = contains >= 0.9 * n and excludes >= 0.9 * n
    record(8, ok, f"calibrated: 0 inside in {contains}/{n}; inflated top quartile: "
                  f"0 excluded in {excludes}/{n} (>= 90%)")


def test_c09_student_fit_recovery(record):
    n = 50
    hits = 0
    nus = []
    for t in range(n):
        z = sample_unit(GenerativeSpec.student(6), 5000, SEED + 3000 + t)
        nu = fit_student_z(PairedSample(z, np.ones_like(z))).nu
        nus.append(nu)
        hits += 4.5 <= nu <= 8.0
    record(9, hits >= 0.9 * n,
           f"nu_Z in [4.5, 8.0] in {hits}/{n} (median {np.median(nus):.2f})")


def _strip(text: str) -> str:
    d = json.loads(text)
    d.pop("timing", None)
    return json.dumps(d, sort_keys=True)


def test_c10_cli_determinism(record, tmp_path, capsys):
    data = tmp_path / "d.csv"
    write_dataset(gen_synthetic(SyntheticModelSpec("nig", 6, 2000), SEED), data)
    inp = ["--input", str(data)]
    commands = {
        "stats": ["stats", *inp, "--boot", "200"],
        "summarize": ["summarize", *inp],
        "validate": ["validate", *inp, "--boot", "200", "--nmc", "200"],
        "simulate": ["simulate", *inp, "--nmc", "200", "--dist", "t6"],
        "scan-nu": ["scan-nu", *inp, "--stat", "zms,ence", "--nmc", "100", "--nu-grid", "3,6,12"],
        "scaling": ["scaling", "--nmc", "100", "--m-grid", "2000,4000", "--n-grid", "10,20",
                    "--nu-grid", "6"],
        "extrapolate": ["extrapolate", *inp, "--boot", "50"],
        "synth": ["synth", "-M", "1000"],
    }
    failed = []
    for name, args in commands.items():
        outs = []
        for workers in ("1", "1", "3"):
            code = main([*args, "--seed", "42", "--workers", workers])
            outs.append((code, capsys.readouterr().out))
        codes = {c for c, _ in outs}
        texts = {(o if name == "synth" else _strip(o)) for _, o in outs}
        if codes != {0} or len(texts) != 1:
            failed.append(name)
    record(10, not failed, f"{len(commands) - len(failed)}/{len(commands)} subcommands identical "
                           f"across repeat and serial/parallel runs" + (f"; differ: {failed}" if failed else ""))
