"""Run configuration, report container and lossless JSON/CSV serialization.

Serialization is driven by dataclass type hints, so any report built from
the package's frozen dataclasses decodes back to an equal object.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import os
import types
import typing
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

from .datasets import DatasetSummary
from .resampling import IntervalEstimate, ReferenceSummary
from .validation import Extrapolation, NuScanPoint, ScalingFit, ValidationReport

SEED_ENV = "UQCAL_SEED"
DEFAULT_STATS = ("zms", "rce", "cc", "nll", "ence", "zmse")


def seed_from_env(default: int = 0) -> int:
    value = os.environ.get(SEED_ENV)
    return int(value) if value not in (None, "") else default


@dataclass(frozen=True)
class RunConfig:
    """Everything, besides the input file, that determines a run's results.

    The worker count is deliberately absent: it never changes results.
    """

    command: str = "validate"
    input: str | None = None
    stats: tuple[str, ...] = DEFAULT_STATS
    n_bins: int = 20
    min_bin_size: int = 20
    candidates: tuple[str, ...] = ("normal", "t:6")
    dist: str | None = None
    n_mc: int = 10000
    n_boot: int = 1000
    level: float = 0.95
    seed: int = 0
    k_sigma: float = 3.0
    format: str = "json"
    plots: bool = False
    options: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class StatEstimate:
    statistic: str
    value: float | None
    interval: IntervalEstimate | None
    error: str | None = None


@dataclass(frozen=True)
class Timing:
    elapsed_seconds: float
    workers: int


@dataclass(frozen=True)
class Report:
    command: str
    config: RunConfig
    version: str
    dataset: DatasetSummary | None = None
    estimates: list[StatEstimate] = field(default_factory=list)
    validations: list[ValidationReport] = field(default_factory=list)
    references: list[ReferenceSummary] = field(default_factory=list)
    nu_scan: dict[str, list[NuScanPoint]] = field(default_factory=dict)
    scaling: list[ScalingFit] = field(default_factory=list)
    extrapolations: list[Extrapolation] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    timing: Timing | None = None


# -- encoding -----------------------------------------------------------------

def to_jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def from_jsonable(tp, data):
    """Rebuild an object of type ``tp`` from :func:`to_jsonable` output."""
    if data is None:
        return None
    origin = typing.get_origin(tp)
    if origin in (Union, types.UnionType):
        options = [a for a in typing.get_args(tp) if a is not type(None)]
        if len(options) == 1:
            return from_jsonable(options[0], data)
        for a in options:  # plain unions such as str | int keep the decoded JSON type
            if isinstance(a, type) and isinstance(data, a):
                return data
        return data
    if origin in (list, tuple):
        args = typing.get_args(tp)
        if origin is tuple and not (len(args) == 2 and args[1] is Ellipsis):
            return tuple(from_jsonable(a, v) for a, v in zip(args, data))
        item = args[0] if args else Any
        seq = [from_jsonable(item, v) for v in data]
        return tuple(seq) if origin is tuple else seq
    if origin is dict:
        kt, vt = typing.get_args(tp) or (str, Any)
        return {from_jsonable(kt, k): from_jsonable(vt, v) for k, v in data.items()}
    if tp is Any:
        return data
    if isinstance(tp, type):
        if dataclasses.is_dataclass(tp):
            hints = typing.get_type_hints(tp)
            kwargs = {f.name: from_jsonable(hints[f.name], data[f.name])
                      for f in dataclasses.fields(tp) if f.init and f.name in data}
            return tp(**kwargs)
        if issubclass(tp, enum.Enum):
            return tp(data)
        if tp is float:
            return float(data)
        if tp is int and not isinstance(data, bool):
            return int(data)
    return data


def report_to_json(report: Report) -> str:
    return json.dumps(to_jsonable(report), indent=2) + "\n"


def report_from_json(text: str) -> Report:
    return from_jsonable(Report, json.loads(text))


# -- CSV: one row per leaf, keyed by a dotted path -------------------------------

def _flatten(obj, prefix: str, out: list[tuple[str, str]]) -> None:
    if isinstance(obj, dict) and obj:
        for k, v in obj.items():
            _flatten(v, f"{prefix}.{k}" if prefix else str(k), out)
    elif isinstance(obj, list) and obj:
        for i, v in enumerate(obj):
            _flatten(v, f"{prefix}.{i}" if prefix else str(i), out)
    else:
        out.append((prefix, json.dumps(obj)))


def _unflatten(rows: list[tuple[str, str]]):
    root: dict = {}
    for path, value in rows:
        keys = path.split(".")
        node = root
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = json.loads(value)

    def fix(node):
        # dicts whose keys are exactly 0..n-1 were lists
        if not isinstance(node, dict):
            return node
        fixed = {k: fix(v) for k, v in node.items()}
        if fixed and all(k.isdigit() for k in fixed) and sorted(map(int, fixed)) == list(range(len(fixed))):
            return [fixed[str(i)] for i in range(len(fixed))]
        return fixed

    return fix(root)


def report_to_csv(report: Report) -> str:
    rows: list[tuple[str, str]] = []
    _flatten(to_jsonable(report), "", rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["path", "value"])
    writer.writerows(rows)
    return buf.getvalue()


def report_from_csv(text: str) -> Report:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != ["path", "value"]:
        raise ValueError("not a report CSV")
    return from_jsonable(Report, _unflatten([(p, v) for p, v in reader]))


def serialize(report: Report, format: str = "json") -> str:
    if format == "json":
        return report_to_json(report)
    if format == "csv":
        return report_to_csv(report)
    raise ValueError(f"unknown report format {format!r}")


def parse(text: str, format: str = "json") -> Report:
    if format == "json":
        return report_from_json(text)
    if format == "csv":
        return report_from_csv(text)
    raise ValueError(f"unknown report format {format!r}")


def write_report(report: Report, path: str | os.PathLike, format: str = "json") -> None:
    text = serialize(report, format)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror}") from exc


def read_report(path: str | os.PathLike, format: str | None = None) -> Report:
    fmt = format or ("csv" if str(path).lower().endswith(".csv") else "json")
    with open(path, newline="") as fh:
        return parse(fh.read(), fmt)
