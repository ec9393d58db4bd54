"""
SVG line charts of run diagnostics.

Figures are built on a bare :class:`matplotlib.figure.Figure` so that no
global pyplot state is touched, and saved with a fixed hash salt and no
date stamp so repeated renders are byte-identical.
"""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

from .errors import EmptyData

SERIES_GID = "series"

LABELS = {
    "diameter": "diameter (max pairwise $W_p$)",
    "lyapunov": r"Lyapunov value (max pairwise $W_p^p$)",
}


def plot_style() -> dict:
    """rc settings shared by every figure."""
    return {
        "font.size": 10,
        "axes.labelsize": 11,
        "axes.linewidth": 0.8,
        "lines.linewidth": 1.5,
        "xtick.direction": "in",
        "ytick.direction": "in",
        "axes.grid": True,
        "grid.alpha": 0.3,
        "svg.hashsalt": "wcons",
        "svg.fonttype": "none",
        "path.simplify": False,
    }


def read_series(csv_path: str | Path, kind: str) -> tuple:
    """Steps and values of one diagnostics column."""
    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise EmptyData(f"{csv_path} has no data rows")
    if kind not in rows[0]:
        raise EmptyData(f"{csv_path} has no {kind!r} column")
    t = [int(r["t"]) for r in rows]
    y = [float(r[kind]) for r in rows]
    return t, y


def render_series(t, y, kind: str, log_scale: bool = True, title: str | None = None) -> str:
    """Render a diagnostics series to a standalone SVG document."""
    if kind not in LABELS:
        raise ValueError(f"unknown plot kind {kind!r}")
    pts = [(a, b) for a, b in zip(t, y) if math.isfinite(b)]
    if not pts:
        raise EmptyData(f"nothing to draw for {kind}")
    if log_scale:
        positive = [(a, b) for a, b in pts if b > 0]
        # an exactly-converged run has nothing to show on a log axis
        if positive:
            pts = positive
        else:
            log_scale = False
    xs, ys = zip(*pts)
    with matplotlib.rc_context(plot_style()):
        fig = Figure(figsize=(6.0, 3.8))
        ax = fig.add_subplot(1, 1, 1)
        (line,) = ax.plot(xs, ys, color="#1f4e79", marker="." if len(xs) < 40 else None)
        line.set_gid(SERIES_GID)
        if log_scale:
            ax.set_yscale("log")
        ax.set_xlabel("step index $t$")
        ax.set_ylabel(LABELS[kind])
        if title:
            ax.set_title(title)
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def emit_plot(csv_path: str | Path, kind: str = "diameter", log_scale: bool = True,
              out_path: str | Path | None = None, title: str | None = None) -> str:
    """Plot one column of a diagnostics CSV; optionally write the SVG to ``out_path``."""
    t, y = read_series(csv_path, kind)
    svg = render_series(t, y, kind, log_scale, title)
    if out_path is not None:
        from .runner import atomic_write

        atomic_write(Path(out_path), svg)
    return svg
