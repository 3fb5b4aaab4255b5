"""Plain-text plot data and minimal SVG renderings of report contents."""

from __future__ import annotations

import math
import os
from pathlib import Path
from xml.sax.saxutils import escape

from .reporting import Report


def _num(v) -> str:
    if v is None:
        return "nan"
    return repr(float(v))


def _write(path: Path, header: list[str], columns: list[str], rows: list[list]) -> Path:
    lines = [f"# {h}" for h in header]
    lines.append("# " + " ".join(columns))
    lines.extend(" ".join(str(c) for c in r) for r in rows)
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write plot data to {path}: {exc.strerror}") from exc
    return path


def zeta_rows(report: Report) -> list[list]:
    """One row per (set, scheme): the set is the statistic validated."""
    rows = []
    for v in report.validations:
        for s in v.zeta_scores:
            rows.append([v.statistic.name, s.scheme.value, _num(s.zeta), _num(s.theta_est),
                         _num(s.theta_ref), _num(s.interval.lower), _num(s.interval.upper)])
    return rows


def emit_plot_data(report: Report, directory: str | os.PathLike, *, svg: bool = True) -> list[Path]:
    """Write one data file per figure panel found in ``report``; returns the paths."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create plot directory {out}: {exc.strerror}") from exc
    written = []

    if report.validations:
        rows = zeta_rows(report)
        written.append(_write(out / "zeta_scores.dat", ["zeta-scores by statistic and scheme"],
                              ["set", "scheme", "zeta", "theta_est", "theta_ref", "lower", "upper"],
                              rows))
        if svg:
            written.append(_svg_bars(out / "zeta_scores.svg", rows))

    for name, points in report.nu_scan.items():
        rows = [[_num(p.nu), _num(p.mean), _num(p.standard_error)] for p in points]
        written.append(_write(out / f"scan_nu_{name.lower()}.dat",
                              [f"simulated reference of {name} against nu (nan = normal)"],
                              ["nu", "mean", "se"], rows))

    for fit in report.scaling:
        header = [f"{fit.statistic} scaling, model {fit.model}",
                  f"intercept {_num(fit.intercept)}", f"slope {_num(fit.slope)}",
                  f"slope_se {_num(fit.slope_se)}", f"beta {_num(fit.beta)}",
                  f"beta_se {_num(fit.beta_se)}", f"chi2_dof {_num(fit.chi2_dof)}"]
        rows = [[p.M, p.N, _num(p.nu), _num(p.x), _num(p.mean), _num(p.standard_error)]
                for p in fit.design_points]
        stem = f"scaling_{fit.model}_{fit.statistic.lower()}"
        written.append(_write(out / f"{stem}.dat", header,
                              ["M", "N", "nu", "x", "mean", "se"], rows))
        if svg:
            xy = [(p.x, p.mean) for p in fit.design_points]
            written.append(_svg_line(out / f"{stem}.svg", xy, fit.intercept, fit.slope,
                                     f"{fit.statistic} {fit.model}"))

    for ex in report.extrapolations:
        header = [f"{ex.statistic} against sqrt(N/M), M={ex.M}",
                  f"intercept {_num(ex.intercept)}", f"slope {_num(ex.slope)}",
                  f"interval {_num(ex.intercept_interval.lower)} {_num(ex.intercept_interval.upper)}",
                  f"fit uses N > {ex.fit_min_bins}"]
        header += [f"reference {r.model} intercept {_num(r.intercept)} slope {_num(r.slope)}"
                   for r in ex.reference_lines]
        rows = [[n, _num(x), _num(y)] for n, x, y in zip(ex.n_bins, ex.x, ex.values)]
        stem = f"extrapolation_{ex.statistic.lower()}"
        written.append(_write(out / f"{stem}.dat", header, ["N", "x", "value"], rows))
        if svg:
            written.append(_svg_line(out / f"{stem}.svg", list(zip(ex.x, ex.values)),
                                     ex.intercept, ex.slope, f"{ex.statistic} M={ex.M}"))
    return written


# -- SVG ------------------------------------------------------------------------

W, H, PAD = 480, 320, 40


def _svg(path: Path, body: list[str], title: str) -> Path:
    doc = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
           f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
           *body, "</svg>"]
    path.write_text("\n".join(doc) + "\n")
    return path


def _svg_bars(path: Path, rows: list[list]) -> Path:
    vals = [float(r[2]) for r in rows]
    finite = [abs(v) for v in vals if math.isfinite(v)]
    lim = max([1.5, *finite]) * 1.1
    n = max(1, len(rows))
    bh = (H - 2 * PAD) / n
    x0 = W / 2

    def sx(v):
        return x0 + v / lim * (W / 2 - PAD)

    body = [f'<line x1="{sx(-1):.1f}" y1="{PAD}" x2="{sx(-1):.1f}" y2="{H - PAD}" stroke="grey" stroke-dasharray="4"/>',
            f'<line x1="{sx(1):.1f}" y1="{PAD}" x2="{sx(1):.1f}" y2="{H - PAD}" stroke="grey" stroke-dasharray="4"/>',
            f'<line x1="{x0}" y1="{PAD}" x2="{x0}" y2="{H - PAD}" stroke="black"/>']
    for i, (r, v) in enumerate(zip(rows, vals)):
        y = PAD + i * bh
        if math.isfinite(v):
            a, b = sorted((x0, sx(v)))
            color = "seagreen" if abs(v) <= 1 else "firebrick"
            body.append(f'<rect x="{a:.1f}" y="{y + 2:.1f}" width="{b - a:.1f}" '
                        f'height="{bh - 4:.1f}" fill="{color}"/>')
        body.append(f'<text x="4" y="{y + bh / 2 + 4:.1f}" font-size="10">{escape(r[0])} {escape(r[1])}</text>')
    return _svg(path, body, "zeta-scores")


def _svg_line(path: Path, xy: list[tuple[float, float]], intercept: float, slope: float,
              title: str) -> Path:
    xs = [0.0] + [x for x, _ in xy]
    ys = [min(0.0, intercept)] + [y for _, y in xy]
    xmax, ymin, ymax = max(xs) * 1.05 or 1.0, min(ys), max(ys) * 1.05 or 1.0
    span = (ymax - ymin) or 1.0

    def sx(x):
        return PAD + x / xmax * (W - 2 * PAD)

    def sy(y):
        return H - PAD - (y - ymin) / span * (H - 2 * PAD)

    body = [f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
            f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
            f'<line x1="{sx(0):.1f}" y1="{sy(intercept):.1f}" x2="{sx(xmax):.1f}" '
            f'y2="{sy(intercept + slope * xmax):.1f}" stroke="steelblue"/>']
    body += [f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="2.5" fill="black"/>' for x, y in xy]
    return _svg(path, body, title)
