"""Command-line interface.

Exit status reports process health only: 0 on success, 1 on a data or I/O
error, 2 on a usage error. Validation verdicts go to the report and stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
import warnings
from typing import Sequence

from . import __version__
from .datasets import load_dataset, summarize, write_dataset
from .errors import UQCalError
from .generative import GenerativeSpec, SyntheticModelSpec, gen_synthetic
from .plots import emit_plot_data
from .reporting import DEFAULT_STATS, Report, RunConfig, StatEstimate, Timing, seed_from_env, serialize
from .resampling import bootstrap_ci, default_workers, simulate_reference
from .stats import Statistic
from .validation import (
    DEFAULT_M_GRID,
    DEFAULT_N_GRID,
    DEFAULT_NU_GRID,
    ValidationConfig,
    extrapolate_to_zero_bins,
    scaling_study,
    scan_nu,
    substream,
    validate,
)

logger = logging.getLogger("uqcal")


def _csv_list(kind):
    def parse(text: str):
        try:
            return tuple(kind(v) for v in text.split(",") if v.strip())
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def _dist(text: str) -> str:
    try:
        return str(GenerativeSpec.parse(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _stats(text: str) -> tuple[str, ...]:
    names = tuple(v.strip().lower() for v in text.split(",") if v.strip())
    for n in names:
        if n not in DEFAULT_STATS:
            raise argparse.ArgumentTypeError(f"unknown statistic {n!r}; choose from {DEFAULT_STATS}")
    return names


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="master seed (default: $UQCAL_SEED, else 0)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--plots-dir", help="write plot data files to this directory")
    common.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: $UQCAL_WORKERS, else 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", required=True, help="CSV with columns E, uE")
    data.add_argument("--skip-invalid", action="store_true",
                      help="drop invalid rows instead of failing")

    stat = argparse.ArgumentParser(add_help=False)
    stat.add_argument("--stat", type=_stats, default=None,
                      help="comma-separated statistics (zms,rce,cc,nll,ence,zmse)")
    stat.add_argument("--bins", type=int, default=20)
    stat.add_argument("--min-bin-size", type=int, default=20)
    stat.add_argument("--nmc", type=int, default=10000)
    stat.add_argument("--boot", type=int, default=1000)
    stat.add_argument("--level", type=float, default=0.95)

    parser = argparse.ArgumentParser(prog="uqcal", description="Calibration statistics for "
                                     "prediction uncertainties with simulated references.")
    parser.add_argument("--version", action="version", version=f"uqcal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("stats", parents=[common, data, stat],
                   help="point estimates with bootstrap intervals")
    sub.add_parser("summarize", parents=[common, data],
                   help="dataset size, robust skewness and z-score Student-t fit")
    p = sub.add_parser("validate", parents=[common, data, stat], help="validation workflow")
    p.add_argument("--dist", type=_dist, default=None,
                   help="declared generative law: normal, t6 or t:<nu> (default: unknown)")
    p.add_argument("--k", type=float, default=3.0, help="sensitivity gate multiplier")
    p = sub.add_parser("simulate", parents=[common, data, stat],
                       help="simulated reference values for a generative law")
    p.add_argument("--dist", type=_dist, default="normal")
    p = sub.add_parser("scan-nu", parents=[common, data, stat],
                       help="simulated references against the Student-t nu")
    p.add_argument("--nu-grid", type=_csv_list(float), default=tuple(float(v) for v in range(3, 21)))
    p.add_argument("--no-normal", action="store_true", help="omit the normal law")
    p.set_defaults(nmc=1000, bins=50)
    p = sub.add_parser("scaling", parents=[common],
                       help="ENCE and ZMSE size scaling on synthetic calibrated data")
    p.add_argument("--model", choices=("nig", "t6ig"), default="nig")
    p.add_argument("--m-grid", type=_csv_list(int), default=DEFAULT_M_GRID)
    p.add_argument("--n-grid", type=_csv_list(int), default=DEFAULT_N_GRID)
    p.add_argument("--nu-grid", type=_csv_list(float), default=DEFAULT_NU_GRID)
    p.add_argument("--nmc", type=int, default=5000)
    p.add_argument("--min-bin-size", type=int, default=20)
    p = sub.add_parser("extrapolate", parents=[common, data],
                       help="binned statistic extrapolated to zero bins")
    p.add_argument("--stat", type=_stats, default=("zmse",))
    p.add_argument("--n-min", type=int, default=10)
    p.add_argument("--n-max", type=int, default=150)
    p.add_argument("--min-bin-size", type=int, default=20)
    p.add_argument("--fit-above", type=int, default=20)
    p.add_argument("--boot", type=int, default=200)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--interval", choices=("bootstrap", "ols"), default="bootstrap")
    p = sub.add_parser("synth", parents=[common], help="write a synthetic calibrated dataset")
    p.add_argument("--model", choices=("nig", "t6ig"), default="nig")
    p.add_argument("--nu", type=float, default=6.0, help="shape of the uncertainty distribution")
    p.add_argument("-M", "--size", type=int, default=5000)
    return parser


def _config(args, stats=None, **options) -> RunConfig:
    base = RunConfig()
    return RunConfig(
        command=args.command,
        input=getattr(args, "input", None),
        stats=tuple(stats if stats is not None else (getattr(args, "stat", None) or DEFAULT_STATS)),
        n_bins=getattr(args, "bins", base.n_bins),
        min_bin_size=getattr(args, "min_bin_size", base.min_bin_size),
        dist=getattr(args, "dist", None),
        n_mc=getattr(args, "nmc", base.n_mc),
        n_boot=getattr(args, "boot", base.n_boot),
        level=getattr(args, "level", base.level),
        seed=args.seed,
        k_sigma=getattr(args, "k", base.k_sigma),
        format=args.format,
        plots=args.plots_dir is not None,
        options=options,
    )


def _statistic(name: str, cfg: RunConfig) -> Statistic:
    return Statistic.of(name, cfg.n_bins, cfg.min_bin_size)


def _validation_config(cfg: RunConfig, workers: int) -> ValidationConfig:
    return ValidationConfig(
        n_boot=cfg.n_boot, n_mc=cfg.n_mc, level=cfg.level, seed=cfg.seed, k_sigma=cfg.k_sigma,
        dist=GenerativeSpec.parse(cfg.dist) if cfg.dist else None,
        candidates=tuple(GenerativeSpec.parse(c) for c in cfg.candidates), workers=workers,
    )


def _run(args, workers: int) -> Report | None:
    cmd = args.command
    if cmd == "synth":
        model = SyntheticModelSpec(args.model, args.nu, args.size)
        text = write_dataset(gen_synthetic(model, args.seed))
        _emit(text, args.out)
        return None

    if cmd == "scaling":
        cfg = _config(args, stats=("ence", "zmse"), model=args.model,
                      m_grid=list(args.m_grid), n_grid=list(args.n_grid),
                      nu_grid=list(args.nu_grid))
        fits = scaling_study(args.model, args.m_grid, args.n_grid, args.nu_grid, cfg.n_mc,
                             cfg.seed, min_bin_size=cfg.min_bin_size, workers=workers)
        for f in fits.values():
            print(f"{f.statistic} ({f.model}): {f.intercept:.4f} + {f.slope:.4f} x "
                  f"(slope se {f.slope_se:.4f})", file=sys.stderr)
        return Report(cmd, cfg, __version__, scaling=list(fits.values()))

    loaded = load_dataset(args.input, skip_invalid=args.skip_invalid)
    sample = loaded.sample
    notes = [f"rejected data row {r.row}: {r.reason}" for r in loaded.rejected]
    notes += [f"dropped non-numeric column {c!r}" for c in loaded.dropped_columns]

    if cmd == "summarize":
        cfg = _config(args, stats=())
        summary = summarize(sample)
        return Report(cmd, cfg, __version__, dataset=summary, warnings=notes + summary.warnings)

    if cmd == "extrapolate":
        cfg = _config(args, n_range=[args.n_min, args.n_max], fit_above=args.fit_above,
                      interval=args.interval)
        exs = []
        for name in cfg.stats:
            ex = extrapolate_to_zero_bins(
                sample, name, range(args.n_min, args.n_max + 1), cfg.min_bin_size,
                args.fit_above, cfg.level, interval=args.interval, n_boot=cfg.n_boot,
                seed=cfg.seed, workers=workers)
            exs.append(ex)
            lo, hi = ex.intercept_interval.lower, ex.intercept_interval.upper
            print(f"{ex.statistic}: intercept {ex.intercept:.4f} [{lo:.4f}, {hi:.4f}] "
                  f"{'consistent' if ex.consistent else 'inconsistent'} with zero", file=sys.stderr)
        return Report(cmd, cfg, __version__, extrapolations=exs, warnings=notes)

    if cmd == "scan-nu":
        cfg = _config(args, nu_grid=list(args.nu_grid), include_normal=not args.no_normal)
        scans = {}
        for name in cfg.stats:
            stat = _statistic(name, cfg)
            scans[stat.name] = scan_nu(sample, stat, args.nu_grid, cfg.n_mc, cfg.seed,
                                       include_normal=not args.no_normal, workers=workers)
        return Report(cmd, cfg, __version__, nu_scan=scans, warnings=notes)

    cfg = _config(args)
    if cmd == "stats":
        estimates = []
        for name in cfg.stats:
            stat = _statistic(name, cfg)
            try:
                iv = bootstrap_ci(sample, stat, cfg.n_boot, cfg.level,
                                  substream(cfg.seed, "boot", stat.name), workers=workers)
                estimates.append(StatEstimate(stat.name, iv.point, iv))
                print(f"{stat.name}: {iv.point:.6g} [{iv.lower:.6g}, {iv.upper:.6g}]", file=sys.stderr)
            except UQCalError as exc:
                estimates.append(StatEstimate(stat.name, None, None, f"{type(exc).__name__}: {exc}"))
        return Report(cmd, cfg, __version__, estimates=estimates, warnings=notes)

    if cmd == "simulate":
        d = GenerativeSpec.parse(cfg.dist)
        refs, estimates = [], []
        for name in cfg.stats:
            stat = _statistic(name, cfg)
            ref = simulate_reference(sample, stat, d, cfg.n_mc,
                                     substream(cfg.seed, "mc", stat.name, str(d)),
                                     level=cfg.level, workers=workers)
            refs.append(ref.summary())
            estimates.append(StatEstimate(stat.name, stat(sample), None))
            print(f"{stat.name}: reference {ref.mean:.6g} +/- {ref.standard_error:.2g} ({d})",
                  file=sys.stderr)
        return Report(cmd, cfg, __version__, estimates=estimates, references=refs, warnings=notes)

    # validate
    vcfg = _validation_config(cfg, workers)
    reports = []
    for name in cfg.stats:
        r = validate(sample, _statistic(name, cfg), vcfg)
        reports.append(r)
        print(f"{r.statistic.name}: {r.verdict.value}", file=sys.stderr)
    summary = summarize(sample)
    extra = [w for r in reports for w in r.warnings]
    return Report(cmd, cfg, __version__, dataset=summary, validations=reports,
                  warnings=notes + summary.warnings + extra)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is None:
        try:
            args.seed = seed_from_env()
        except ValueError:
            parser.print_usage(sys.stderr)
            print("uqcal: error: UQCAL_SEED must be an integer", file=sys.stderr)
            return 2
    workers = args.workers if args.workers is not None else default_workers()

    start = time.perf_counter()
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report = _run(args, workers)
        for w in caught:
            logger.info("%s: %s", w.category.__name__, w.message)
        if report is None:
            return 0
        notes = list(dict.fromkeys([*report.warnings, *(str(w.message) for w in caught)]))
        report = dataclasses.replace(report, warnings=notes,
                                     timing=Timing(round(time.perf_counter() - start, 3), workers))
        _emit(serialize(report, args.format), args.out)
        if args.plots_dir:
            emit_plot_data(report, args.plots_dir)
    except (UQCalError, OSError) as exc:
        print(f"uqcal: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        # invalid parameter combinations that argparse cannot catch
        print(f"uqcal: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
