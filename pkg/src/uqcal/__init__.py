"""Calibration statistics for prediction uncertainties, validated against
simulated reference values."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import UQCalError
from .generative import (
    GenerativeSpec,
    ModelKind,
    SyntheticModelSpec,
    ZFit,
    fit_student,
    fit_student_z,
    gen_synthetic,
    sample_unit,
    synth_errors,
)
from .resampling import (
    IntervalEstimate,
    SimulatedReference,
    bootstrap_ci,
    derive_replicate_seed,
    simulate_reference,
)
from .stats import (
    BinningConfig,
    PairedSample,
    Statistic,
    StatKind,
    beta_gm,
    compute,
    ence,
    nll,
    nll_ref,
    rce,
    spearman_cc,
    zmse,
    zms,
)
from .validation import (
    Centering,
    ValidationConfig,
    ValidationReport,
    Verdict,
    extrapolate_to_zero_bins,
    scaling_study,
    scan_nu,
    sensitivity_gate,
    validate,
    zeta,
    zeta_bs,
    zeta_sim,
    zeta_sim2,
)
from .datasets import read_dataset, summarize, write_dataset
from .reporting import Report, RunConfig, read_report, write_report

__all__ = [name for name in dir() if not name.startswith("_")]
