"""CSV ingestion and export of paired error/uncertainty datasets, plus summaries."""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyFile,
    MissingColumn,
    NonConvergence,
    NonFiniteValue,
    NonPositiveUncertainty,
    UQCalError,
)
from .generative import ZFit, fit_student_z
from .stats import PairedSample, beta_gm, z_scores
from .validation import BETA_GM_LIMIT_E2, BETA_GM_LIMIT_U2

logger = logging.getLogger(__name__)

ERROR_COLUMN = "e"
UNCERTAINTY_COLUMN = "ue"


@dataclass(frozen=True)
class RejectedRow:
    row: int  # 0-based data row (the header is not counted)
    reason: str


@dataclass(frozen=True, eq=False)
class LoadedDataset:
    sample: PairedSample
    n_rows: int
    rejected: list[RejectedRow] = field(default_factory=list)
    dropped_columns: list[str] = field(default_factory=list)


def _parse(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return math.nan


def load_dataset(path: str | os.PathLike, *, skip_invalid: bool = False) -> LoadedDataset:
    """Read a CSV with ``E`` and ``uE`` columns (any case) and optional features.

    Invalid rows raise unless ``skip_invalid`` is set, in which case they are
    dropped and listed in ``rejected``. Feature columns with non-numeric
    entries are dropped.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise EmptyFile(f"{path}: no header row")
    header = [c.strip() for c in rows[0]]
    lower = [c.lower() for c in header]
    for col, shown in ((ERROR_COLUMN, "E"), (UNCERTAINTY_COLUMN, "uE")):
        if col not in lower:
            raise MissingColumn(f"{path}: missing column {shown!r} (found {header})")
    ie, iu = lower.index(ERROR_COLUMN), lower.index(UNCERTAINTY_COLUMN)
    data = rows[1:]
    if not data:
        raise EmptyFile(f"{path}: header but no data rows")

    extra = [j for j in range(len(header)) if j not in (ie, iu)]
    table = np.full((len(data), len(header)), math.nan)
    for i, r in enumerate(data):
        for j, cell in enumerate(r[: len(header)]):
            table[i, j] = _parse(cell.strip())
    dropped = [header[j] for j in extra if not np.all(np.isfinite(table[:, j]))]
    keep_cols = [j for j in extra if header[j] not in dropped]
    if dropped:
        logger.info("dropping non-numeric feature columns %s", dropped)

    e, u = table[:, ie], table[:, iu]
    rejected = []
    keep = np.ones(len(data), dtype=bool)
    for i in range(len(data)):
        if not (math.isfinite(e[i]) and math.isfinite(u[i])):
            if not skip_invalid:
                raise NonFiniteValue(f"{path}: non-finite value in data row {i} (line {i + 2})", row=i)
            rejected.append(RejectedRow(i, "non-finite value"))
            keep[i] = False
        elif u[i] <= 0:
            if not skip_invalid:
                raise NonPositiveUncertainty(
                    f"{path}: uncertainty {u[i]:g} <= 0 in data row {i} (line {i + 2})", row=i
                )
            rejected.append(RejectedRow(i, "non-positive uncertainty"))
            keep[i] = False
    if not keep.any():
        raise EmptyFile(f"{path}: no valid data rows")
    features = table[keep][:, keep_cols] if keep_cols else None
    sample = PairedSample(e[keep], u[keep], features, tuple(header[j] for j in keep_cols))
    return LoadedDataset(sample, len(data), rejected, dropped)


def read_dataset(path: str | os.PathLike, *, skip_invalid: bool = False) -> PairedSample:
    return load_dataset(path, skip_invalid=skip_invalid).sample


def write_dataset(sample: PairedSample, path: str | os.PathLike | None = None) -> str:
    """Write ``sample`` as CSV; floats use ``repr`` so they round-trip exactly.

    Returns the CSV text; also writes it to ``path`` when given.
    """
    names = ["E", "uE", *sample.feature_names]
    lines = [",".join(names)]
    cols = [sample.errors, sample.uncertainties]
    if sample.features is not None:
        cols.extend(sample.features.T)
    for row in zip(*cols):
        lines.append(",".join(repr(float(v)) for v in row))
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


@dataclass(frozen=True)
class DatasetSummary:
    M: int
    beta_gm_u2: float | None
    beta_gm_e2: float | None
    beta_gm_z2: float | None
    flag_u2: bool
    flag_e2: bool
    flag_z2: bool
    zfit: ZFit | None
    warnings: list[str] = field(default_factory=list)


def summarize(sample: PairedSample) -> DatasetSummary:
    """Size, robust skewness with safety flags, and a Student-t fit of the z-scores."""
    notes = []
    betas = {}
    for name, x in (("u2", sample.uncertainties**2), ("E2", sample.errors**2),
                    ("Z2", z_scores(sample) ** 2)):
        try:
            betas[name] = beta_gm(x)
        except UQCalError as exc:
            betas[name] = None
            notes.append(f"beta_GM({name}): {exc}")
    flags = {
        "u2": betas["u2"] is not None and betas["u2"] > BETA_GM_LIMIT_U2,
        "E2": betas["E2"] is not None and betas["E2"] > BETA_GM_LIMIT_E2,
        "Z2": betas["Z2"] is not None and betas["Z2"] > BETA_GM_LIMIT_E2,
    }
    for name, limit in (("u2", BETA_GM_LIMIT_U2), ("E2", BETA_GM_LIMIT_E2), ("Z2", BETA_GM_LIMIT_E2)):
        if flags[name]:
            notes.append(f"beta_GM({name}) = {betas[name]:.3f} exceeds safety limit {limit}")
    zfit = None
    try:
        zfit = fit_student_z(sample)
    except NonConvergence as exc:
        notes.append(f"z-score fit: {exc}")
    except UQCalError as exc:
        notes.append(f"z-score fit skipped: {exc}")
    return DatasetSummary(sample.size, betas["u2"], betas["E2"], betas["Z2"],
                          flags["u2"], flags["E2"], flags["Z2"], zfit, notes)
