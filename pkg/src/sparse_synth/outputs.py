"""Result files: results.json, CSV tables and an optional SVG overlay plot."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .array_model import to_db
from .pipeline import RunReport, band_levels

PATTERN_HEADER = ["u", "ref_db", "synth_db"]
ELEMENTS_HEADER = ["n", "d_wl", "w_re", "w_im"]
RANKTRACE_HEADER = ["k", "rank", "surrogate"]


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _solution_dict(sol):
    return {
        "R": sol.R,
        "positions": [_num(d) for d in sol.positions],
        "weights": [[_num(w.real), _num(w.imag)] for w in sol.weights],
        "eigenvalues": [[_num(z.real), _num(z.imag)] for z in sol.eigenvalues],
        "radial_deviation": [_num(r) for r in sol.radial_deviation],
        "ls_residual": _num(sol.ls_residual),
    }


def _metrics_dict(m):
    return {
        "peak_u": _num(m.peak_u),
        "psl_db": _num(m.psl_db),
        "mainlobe_null_width_u": _num(m.mainlobe_null_width_u),
        "degenerate": m.degenerate,
    }


def report_dict(report: RunReport) -> dict:
    """Deterministic summary of a run (no timings)."""
    cfg = report.config
    out = {
        "config": cfg.to_dict(),
        "reference_elements": cfg.elements,
        "partition": {"n_l": report.partition.n_l, "n_r": report.partition.n_r},
        "metrics": {k: _metrics_dict(v) for k, v in report.metrics.items()},
    }
    if report.logdet is not None:
        st = report.logdet_state
        out["logdet"] = _solution_dict(report.logdet)
        out["rank_trace"] = list(st.rank_trace)
        out["surrogate_trace"] = [_num(v) for v in st.surrogate_trace]
        out["solver_status"] = list(st.statuses)
        out["delta"] = _num(st.delta)
        out["constraint_slack"] = {k: _num(v) for k, v in report.slack.items()}
        if cfg.notches:
            out["notch_levels_db"] = band_levels(report.grid, report.logdet_pattern, cfg.notches)
    if report.mpm is not None:
        out["mpm"] = _solution_dict(report.mpm)
    return out


def _write_elements(path: Path, sol):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ELEMENTS_HEADER)
        for i, (d, wt) in enumerate(zip(sol.positions, sol.weights), start=1):
            w.writerow([i, repr(float(d)), repr(float(wt.real)), repr(float(wt.imag))])


def emit_outputs(report: RunReport, out_dir, plot: bool = False) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    p = out / "results.json"
    p.write_text(json.dumps(report_dict(report), indent=2, sort_keys=True) + "\n")
    written.append(p)

    p = out / "timings.json"
    p.write_text(json.dumps(report.timings, indent=2, sort_keys=True) + "\n")
    written.append(p)

    primary = report.logdet if report.logdet is not None else report.mpm
    if primary is not None:
        p = out / "elements.csv"
        _write_elements(p, primary)
        written.append(p)
    if report.logdet is not None and report.mpm is not None:
        p = out / "elements_mpm.csv"
        _write_elements(p, report.mpm)
        written.append(p)

    columns = [report.grid.u, to_db(report.reference_pattern)]
    header = list(PATTERN_HEADER)
    if report.logdet_pattern is not None:
        columns.append(to_db(report.logdet_pattern))
        if report.mpm_pattern is not None:
            columns.append(to_db(report.mpm_pattern))
            header.append("baseline_db")
    elif report.mpm_pattern is not None:
        columns.append(to_db(report.mpm_pattern))
    else:
        header = header[:2]
    p = out / "pattern.csv"
    with p.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([f"{v:.6f}" for v in row])
    written.append(p)

    if report.logdet_state is not None:
        p = out / "ranktrace.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(RANKTRACE_HEADER)
            st = report.logdet_state
            for k, (r, s) in enumerate(zip(st.rank_trace, st.surrogate_trace)):
                w.writerow([k, r, repr(float(s))])
        written.append(p)

    if plot:
        p = out / "plot.svg"
        p.write_text(render_svg(report))
        written.append(p)
    return written


_COLORS = {"reference": "#888888", "logdet": "#c0392b", "mpm": "#2c6fbb"}


def render_svg(report: RunReport, floor_db: float = -60.0) -> str:
    """Normalised dB patterns (top) and element positions as stems (bottom)."""
    W, H = 720, 560
    left, right = 60, 20
    top_h = 320
    pw = W - left - right
    u = report.grid.u

    def px(uu):
        return left + (uu + 1.0) / 2.0 * pw

    def py(db):
        db = max(db, floor_db)
        return 30 + (-db / -floor_db) * (top_h - 30)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{left}" y="18" font-size="13">{escape(report.config.name)}</text>',
    ]
    for db in range(0, int(floor_db) - 1, -10):
        y = py(db)
        parts.append(f'<line x1="{left}" x2="{left + pw}" y1="{y:.1f}" y2="{y:.1f}" stroke="#eee"/>')
        parts.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">{db}</text>')
    for tick in np.linspace(-1, 1, 9):
        x = px(tick)
        parts.append(f'<text x="{x:.1f}" y="{top_h + 14}" text-anchor="middle">{tick:g}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{top_h + 28}" text-anchor="middle">u = sin(theta)</text>')

    series = [("reference", report.reference_pattern), ("logdet", report.logdet_pattern),
              ("mpm", report.mpm_pattern)]
    step = max(1, u.size // 1500)
    legend_y = 40
    for name, pat in series:
        if pat is None:
            continue
        db = to_db(pat)
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(u[::step], db[::step]))
        dash = ' stroke-dasharray="4,3"' if name == "reference" else ""
        parts.append(f'<polyline fill="none" stroke="{_COLORS[name]}" stroke-width="1.2"{dash} points="{pts}"/>')
        parts.append(f'<text x="{left + pw - 90}" y="{legend_y}" fill="{_COLORS[name]}">{name}</text>')
        legend_y += 14

    y0 = top_h + 60
    sols = [(n, s) for n, s in (("logdet", report.logdet), ("mpm", report.mpm)) if s is not None]
    if sols:
        dmin = min(s.positions.min() for _, s in sols)
        dmax = max(s.positions.max() for _, s in sols)
        span = max(dmax - dmin, 1e-9)
        for row, (name, sol) in enumerate(sols):
            base = y0 + 40 + row * 80
            amp = np.abs(sol.weights) / np.abs(sol.weights).max()
            parts.append(f'<line x1="{left}" x2="{left + pw}" y1="{base}" y2="{base}" stroke="#444"/>')
            parts.append(f'<text x="{left - 6}" y="{base + 4}" text-anchor="end">{name}</text>')
            for d, a in zip(sol.positions, amp):
                x = left + (d - dmin) / span * pw
                parts.append(f'<line x1="{x:.1f}" x2="{x:.1f}" y1="{base}" y2="{base - 35 * a:.1f}" '
                             f'stroke="{_COLORS[name]}" stroke-width="2"/>')
                parts.append(f'<circle cx="{x:.1f}" cy="{base - 35 * a:.1f}" r="2.5" fill="{_COLORS[name]}"/>')
        parts.append(f'<text x="{left}" y="{H - 8}">element positions {dmin:.3f} .. {dmax:.3f} wavelengths</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
