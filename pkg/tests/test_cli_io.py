import csv
import io
import json
import re
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from wcons.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from wcons.errors import EmptyData, NonPositiveVariance, SchemaError, ScenarioSyntaxError
from wcons.measures import Gaussian1D, GridSpec, wasserstein
from wcons.plotting import SERIES_GID, emit_plot, render_series
from wcons.runner import run_scenario
from wcons.scenario import (
    format_number,
    load_scenario,
    measure_from_record,
    measure_to_record,
    parse_scenario,
)

TWO_DIRACS = """
schema_version: 1
name: two-diracs
grid: {size: 64, clip: 1.0e-6}
stop: {epsilon: 1.0e-12, max_steps: 10}
topology: {kind: static, n: 2, edges: [[0, 1]]}
agents:
  - {kind: empirical, atoms: [0], weights: [1]}
  - {kind: empirical, atoms: [2], weights: [1]}
output: {plots: [diameter, lyapunov]}
"""

IDENTICAL = """
schema_version: 1
name: identical
grid: {size: 64}
topology: {kind: static, n: 3, edges: [[0, 1], [1, 2]]}
agents:
  - {kind: gaussian, mean: 1, variance: 2}
  - {kind: gaussian, mean: 1, variance: 2}
  - {kind: gaussian, mean: 1, variance: 2}
output: {plots: [diameter]}
"""

SPLIT = """
schema_version: 1
name: split
grid: {size: 64}
stop: {epsilon: 1.0e-9, max_steps: 25}
topology: {kind: static, n: 4, edges: [[0, 1], [2, 3]]}
agents:
  - {kind: gaussian, mean: 0, variance: 1}
  - {kind: gaussian, mean: 1, variance: 1}
  - {kind: gaussian, mean: 10, variance: 1}
  - {kind: gaussian, mean: 11, variance: 4}
"""


def write(tmp_path, text, name="scenario.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -----------------------------------------------------------------------------
# parsing
# -----------------------------------------------------------------------------
def test_parse_minimal():
    s = parse_scenario(TWO_DIRACS)
    assert s.n == 2 and s.name == "two-diracs"
    assert s.config.grid == GridSpec(64, 1e-6)
    assert s.plots == ("diameter", "lyapunov")


def test_parse_negative_variance():
    with pytest.raises(NonPositiveVariance):
        parse_scenario(TWO_DIRACS.replace("{kind: empirical, atoms: [0], weights: [1]}",
                                          "{kind: gaussian, mean: 0, variance: -1}"))


def test_random_topology_needs_seed():
    text = TWO_DIRACS.replace("{kind: static, n: 2, edges: [[0, 1]]}",
                              "{kind: random, n: 2, base_edges: [[0, 1]], probability: 0.5}")
    with pytest.raises(SchemaError) as err:
        parse_scenario(text)
    assert err.value.path == "seed"
    s = parse_scenario(text + "seed: 9\n")
    assert s.schedule.kind == "random" and s.schedule.seed == 9


@pytest.mark.parametrize("edit,path", [
    (("name: two-diracs", "name: two-diracs\ncolour: red"), "colour"),
    (("schema_version: 1", "schema_version: 2"), "schema_version"),
    (("n: 2,", "n: 3,"), "topology.n"),
    (("{plots: [diameter, lyapunov]}", "{plots: [histogram]}"), "output.plots"),
    (("atoms: [0], weights: [1]}", "atoms: [0], weights: [1], mass: 2}"), "agents[0].mass"),
    (("edges: [[0, 1]]", "edges: [[0, 5]]"), "topology.edges[0]"),
])
def test_schema_errors(edit, path):
    with pytest.raises(SchemaError) as err:
        parse_scenario(TWO_DIRACS.replace(*edit))
    assert err.value.path == path


def test_syntax_error_reports_line():
    with pytest.raises(ScenarioSyntaxError) as err:
        parse_scenario("schema_version: 1\nname: [unterminated\nagents: []\n")
    assert err.value.line is not None and err.value.line >= 2


def test_agent_file_reference(tmp_path):
    (tmp_path / "agent.json").write_text(json.dumps({"kind": "gaussian", "mean": 3, "variance": 2}))
    s = parse_scenario(TWO_DIRACS.replace("{kind: empirical, atoms: [2], weights: [1]}", "{file: agent.json}"),
                       tmp_path)
    assert s.agents[1] == Gaussian1D(3, 2)
    with pytest.raises(SchemaError):
        parse_scenario(TWO_DIRACS.replace("{kind: empirical, atoms: [2], weights: [1]}", "{file: missing.json}"),
                       tmp_path)


def test_measure_records_round_trip(rng):
    from conftest import random_measure
    from wcons.measures import to_quantile

    for _ in range(10):
        m = random_measure(rng)
        for x in (m, to_quantile(m, GridSpec(32))):
            back = measure_from_record(json.loads(json.dumps(measure_to_record(x))))
            assert wasserstein(x, back, 2, GridSpec(32)) == 0


def test_hash_ignores_output_location_but_not_content(tmp_path):
    a = parse_scenario(TWO_DIRACS, tmp_path / "a")
    b = parse_scenario(TWO_DIRACS.replace("output: {", "output: {dir: elsewhere, "), tmp_path / "b")
    assert a.hash() == b.hash()
    c = parse_scenario(TWO_DIRACS.replace("max_steps: 10", "max_steps: 11"))
    assert c.hash() != a.hash()


def test_format_number():
    assert format_number(5 ** 0.5) == "2.23606797750"
    assert format_number(1.0) == "1.00000000000"


# -----------------------------------------------------------------------------
# runs and artifacts
# -----------------------------------------------------------------------------
def test_two_dirac_run(tmp_path):
    arts = run_scenario(parse_scenario(TWO_DIRACS), tmp_path)
    rows = read_csv(arts.diagnostics_csv)
    assert list(rows[0]) == ["t", "lyapunov", "diameter", "dist_to_limit"]
    assert float(rows[0]["diameter"]) > 1.9
    assert float(rows[1]["diameter"]) == 0.0 and len(rows) == 2
    manifest = json.loads(arts.manifest.read_text())
    assert set(manifest) == {"scenario_hash", "version", "terminated_by", "steps"}
    assert manifest["terminated_by"] == "converged" and manifest["steps"] == 1
    assert [p.name for p in arts.plots] == ["diameter.svg", "lyapunov.svg"]


def test_identical_agents_single_row(tmp_path):
    arts = run_scenario(parse_scenario(IDENTICAL), tmp_path)
    rows = read_csv(arts.diagnostics_csv)
    assert len(rows) == 1 and rows[0]["t"] == "0" and float(rows[0]["diameter"]) == 0
    ET.fromstring(arts.plots[0].read_text())


def test_split_network_hits_max_steps(tmp_path):
    arts = run_scenario(parse_scenario(SPLIT), tmp_path)
    manifest = json.loads(arts.manifest.read_text())
    assert manifest["terminated_by"] == "max_steps" and manifest["steps"] == 25
    rows = read_csv(arts.diagnostics_csv)
    assert len(rows) == 26
    assert all(r["dist_to_limit"] == "" for r in rows)  # doubly stochastic but disconnected: no single limit


def test_final_measures_round_trip(tmp_path):
    s = parse_scenario(SPLIT)
    arts = run_scenario(s, tmp_path)
    records = json.loads(arts.final_measures.read_text())
    assert [r["agent"] for r in records] == [0, 1, 2, 3]
    for rec, m in zip(records, arts.result.final.agents):
        assert wasserstein(measure_from_record(rec["measure"]), m) == 0


def test_out_dir_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("WCONS_OUT_DIR", str(tmp_path / "env"))
    arts = run_scenario(parse_scenario(TWO_DIRACS, tmp_path))
    assert arts.diagnostics_csv == tmp_path / "env" / "two-diracs" / "diagnostics.csv"


def test_runs_are_byte_identical(tmp_path):
    s = parse_scenario(TWO_DIRACS)
    a = run_scenario(s, tmp_path / "a")
    b = run_scenario(parse_scenario(TWO_DIRACS), tmp_path / "b")
    for x, y in [(a.diagnostics_csv, b.diagnostics_csv), (a.manifest, b.manifest)] + list(zip(a.plots, b.plots)):
        assert x.read_bytes() == y.read_bytes()


# -----------------------------------------------------------------------------
# plots
# -----------------------------------------------------------------------------
def series_points(svg):
    root = ET.fromstring(svg)
    ns = {"svg": "http://www.w3.org/2000/svg"}
    group = root.find(f".//svg:g[@id='{SERIES_GID}']", ns)
    d = group.find("svg:path", ns).get("d")
    return np.array([[float(a), float(b)] for a, b in re.findall(r"([-\d.]+) ([-\d.]+)", d)])


def test_geometric_decay_is_straight_on_log_axis(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("t,lyapunov,diameter,dist_to_limit\n"
                    + "".join(f"{t},{(4 / 9) ** t!r},{(2 / 3) ** t!r},\n" for t in range(60)))
    pts = series_points(emit_plot(path, "diameter", log_scale=True, out_path=tmp_path / "d.svg"))
    assert len(pts) == 60
    slope, icpt = np.polyfit(pts[:, 0], pts[:, 1], 1)
    assert np.max(np.abs(pts[:, 1] - (slope * pts[:, 0] + icpt))) <= 0.05
    assert (tmp_path / "d.svg").read_text().startswith("<?xml")
    linear = series_points(emit_plot(path, "diameter", log_scale=False))
    slope, icpt = np.polyfit(linear[:, 0], linear[:, 1], 1)
    assert np.max(np.abs(linear[:, 1] - (slope * linear[:, 0] + icpt))) > 5


def test_empty_csv(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("t,lyapunov,diameter,dist_to_limit\n")
    with pytest.raises(EmptyData):
        emit_plot(path)
    with pytest.raises(EmptyData):
        render_series([], [], "diameter")


def test_real_run_plot_is_well_formed(tmp_path):
    text = TWO_DIRACS.replace("n: 2, edges: [[0, 1]]", "n: 3, edges: [[0, 1], [1, 2]]").replace(
        "output: {", "stop2: 0\noutput: {").replace("stop2: 0\n", "") + ""
    text = text.replace("  - {kind: empirical, atoms: [2], weights: [1]}",
                        "  - {kind: empirical, atoms: [2], weights: [1]}\n  - {kind: gaussian, mean: 6, variance: 1}")
    text = text.replace("max_steps: 10", "max_steps: 80")
    arts = run_scenario(parse_scenario(text), tmp_path)
    for p in arts.plots:
        root = ET.fromstring(p.read_text())
        assert root.tag.endswith("svg")
        assert "step index" in p.read_text()


# -----------------------------------------------------------------------------
# command line
# -----------------------------------------------------------------------------
def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_cli_distance():
    code, out, _ = cli("distance", "{kind: gaussian, mean: 0, variance: 1}",
                       "{kind: gaussian, mean: 2, variance: 4}", "--p", "2")
    assert code == EXIT_OK and out.strip() == "2.23606797750"


def test_cli_distance_from_files(tmp_path):
    a = write(tmp_path, json.dumps({"kind": "empirical", "atoms": [0, 1]}), "a.json")
    b = write(tmp_path, json.dumps({"kind": "empirical", "atoms": [2, 3]}), "b.json")
    code, out, _ = cli("distance", str(a), str(b))
    assert code == EXIT_OK and out.strip() == "2.00000000000"


def test_cli_validate(tmp_path):
    code, out, _ = cli("validate", str(write(tmp_path, TWO_DIRACS)))
    assert code == EXIT_OK and out.startswith("ok two-diracs")
    bad = write(tmp_path, TWO_DIRACS.replace("weights: [1]}", "weights: [0.5]}", 1), "bad.yaml")
    code, _, err = cli("validate", str(bad))
    assert code == EXIT_INVALID and "WeightSumMismatch" in err


def test_cli_unknown_subcommand():
    code, _, err = cli("frobnicate")
    assert code == EXIT_USAGE and "usage:" in err
    code, _, err = cli()
    assert code == EXIT_USAGE


def test_cli_run_and_spectral(tmp_path):
    path = write(tmp_path, TWO_DIRACS.replace("output: {", "output: {dir: out, "))
    code, out, _ = cli("run", str(path))
    assert code == EXIT_OK and "terminated_by converged" in out
    assert (tmp_path / "out" / "diagnostics.csv").exists()
    code, out, _ = cli("spectral", str(path))
    assert code == EXIT_OK
    assert "second_largest 0.00000000000" in out and "doubly_stochastic true" in out


def test_cli_runtime_error(tmp_path):
    code, _, err = cli("run", str(tmp_path / "nope.yaml"))
    assert code == EXIT_RUNTIME


def test_cli_barycenter():
    code, out, _ = cli("barycenter", "{kind: gaussian, mean: 0, variance: 1}",
                       "{kind: gaussian, mean: 2, variance: 4}", "--weights", "0.5", "0.5")
    assert code == EXIT_OK
    assert out.splitlines() == ["kind gaussian", "mean 1.00000000000", "variance 2.25000000000"]
    code, out, _ = cli("barycenter", "{kind: empirical, atoms: [0, 2]}", "{kind: empirical, atoms: [10, 12]}")
    assert out.splitlines() == ["kind empirical", "5.00000000000 0.500000000000", "7.00000000000 0.500000000000"]
    code, out, _ = cli("barycenter", "{kind: empirical, atoms: [0]}", "{kind: gaussian, mean: 0, variance: 1}",
                       "--grid", "8")
    assert code == EXIT_OK and out.splitlines()[0].startswith("kind quantile size 8")
    assert len(out.splitlines()) == 9


@pytest.mark.parametrize("path", sorted((Path(__file__).parent.parent / "scenarios").glob("*.yaml")),
                         ids=lambda p: p.stem)
def test_shipped_scenarios_validate(path):
    s = load_scenario(path)
    assert s.output_dir == path.parent / "out" / s.name
