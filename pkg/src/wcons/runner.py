"""Run a scenario end to end and persist its artifacts."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .engine import ConsensusState, RunResult, run
from .plotting import render_series
from .scenario import Scenario, measure_to_record

OUT_DIR_ENV = "WCONS_OUT_DIR"
CSV_COLUMNS = ("t", "lyapunov", "diameter", "dist_to_limit")


@dataclass(frozen=True)
class RunArtifacts:
    diagnostics_csv: Path
    final_measures: Path
    manifest: Path
    plots: tuple = field(default_factory=tuple)
    result: RunResult | None = field(default=None, compare=False, repr=False)


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def diagnostics_csv(result: RunResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in result.diagnostics:
        dist = "" if r.dist_to_limit is None else repr(float(r.dist_to_limit))
        writer.writerow([r.t, repr(float(r.lyapunov)), repr(float(r.diameter)), dist])
    return buf.getvalue()


def final_measures_record(state: ConsensusState) -> list:
    return [{"agent": i, "measure": measure_to_record(m)} for i, m in enumerate(state.agents)]


def resolve_output_dir(s: Scenario, out_dir: str | Path | None = None) -> Path:
    if out_dir is not None:
        return Path(out_dir)
    env = os.environ.get(OUT_DIR_ENV)
    return Path(env) / s.name if env else s.output_dir


def run_scenario(s: Scenario, out_dir: str | Path | None = None) -> RunArtifacts:
    """Execute ``s`` and write diagnostics CSV, final measures, manifest and plots.

    The output directory is, in order of precedence, ``out_dir``,
    ``$WCONS_OUT_DIR/<scenario name>``, or the scenario's ``output.dir``.
    """
    target = resolve_output_dir(s, out_dir)
    result = run(ConsensusState(0, s.agents), s.schedule, s.config, record_envelope=False)

    csv_text = diagnostics_csv(result)
    csv_path = target / "diagnostics.csv"
    atomic_write(csv_path, csv_text)

    finals_path = target / "final_measures.json"
    atomic_write(finals_path, json.dumps(final_measures_record(result.final), indent=1) + "\n")

    plots = []
    t = [r.t for r in result.diagnostics]
    for kind in s.plots:
        y = [getattr(r, kind) for r in result.diagnostics]
        svg_path = target / f"{kind}.svg"
        atomic_write(svg_path, render_series(t, y, kind, s.log_scale, title=s.name))
        plots.append(svg_path)

    manifest = {
        "scenario_hash": s.hash(),
        "version": __version__,
        "terminated_by": result.terminated_by,
        "steps": result.steps,
    }
    manifest_path = target / "manifest.json"
    atomic_write(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return RunArtifacts(csv_path, finals_path, manifest_path, tuple(plots), result)
