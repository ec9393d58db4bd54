"""
Scenario documents and measure records.

A scenario is a YAML (or JSON) mapping::

    schema_version: 1
    name: gaussian-path3
    order: 2
    grid: {size: 4096, clip: 1.0e-6}
    representation: gaussian_closed_form      # or quantile
    weights: {scheme: metropolis}             # lazy_uniform + self_weight, explicit + matrices
    stop: {epsilon: 1.0e-10, max_steps: 100}
    seed: 3                                   # required when topology.kind is random
    topology: {kind: static, n: 3, edges: [[0, 1], [1, 2]]}
    agents:
      - {kind: gaussian, mean: 0, variance: 1}
      - {kind: empirical, atoms: [0, 2], weights: [0.5, 0.5]}
      - {file: agent2.yaml}
    output: {dir: out, plots: [diameter], log_scale: true}

Unknown keys are rejected.  Topology kinds are ``static`` (``edges``),
``periodic`` (``snapshots``, a list of edge lists) and ``random``
(``base_edges``, ``probability``).
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .engine import ConsensusConfig, WeightScheme
from .errors import SchemaError, ScenarioSyntaxError
from .measures import DEFAULT_GRID, EmpiricalMeasure, Gaussian1D, GridSpec, Measure, QuantileMeasure
from .network import NetworkSnapshot, TopologySchedule

SCHEMA_VERSION = 1
PLOT_KINDS = ("diameter", "lyapunov")

_TOP_KEYS = {"schema_version", "name", "order", "grid", "representation", "weights", "stop", "seed",
             "topology", "agents", "output"}


# -----------------------------------------------------------------------------
# measure records
# -----------------------------------------------------------------------------
def grid_to_record(g: GridSpec) -> dict:
    return {"size": g.size, "clip": g.clip}


def measure_to_record(m: Measure) -> dict:
    if isinstance(m, EmpiricalMeasure):
        return {"kind": "empirical", "atoms": m.atoms.tolist(), "weights": m.weights.tolist()}
    if isinstance(m, Gaussian1D):
        return {"kind": "gaussian", "mean": m.mean, "variance": m.variance}
    if isinstance(m, QuantileMeasure):
        return {"kind": "quantile", "grid": grid_to_record(m.grid), "values": m.values.tolist()}
    raise TypeError(f"not a measure: {type(m).__name__}")


def _num(value, path: str) -> float:
    # PyYAML reads 1e-6 (no dot) as a string
    if isinstance(value, bool):
        raise SchemaError(path, "expected a number")
    if isinstance(value, str):
        try:
            value = float(value)
        except ValueError:
            raise SchemaError(path, f"expected a number, got {value!r}") from None
    if not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _int(value, path: str) -> int:
    x = _num(value, path)
    if not x.is_integer():
        raise SchemaError(path, f"expected an integer, got {value!r}")
    return int(x)


def _nums(value, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(path, "expected a list of numbers")
    return [_num(v, f"{path}[{k}]") for k, v in enumerate(value)]


def _mapping(value, path: str, allowed: set, required: set = frozenset()) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(path, "expected a mapping")
    for key in value:
        if key not in allowed:
            raise SchemaError(f"{path}.{key}" if path else str(key), "unknown field")
    for key in required:
        if key not in value:
            raise SchemaError(f"{path}.{key}" if path else key, "missing required field")
    return value


def grid_from_record(rec, path: str = "grid") -> GridSpec:
    rec = _mapping(rec, path, {"size", "clip"}, {"size"})
    return GridSpec(_int(rec["size"], f"{path}.size"), _num(rec.get("clip", DEFAULT_GRID.clip), f"{path}.clip"))


def measure_from_record(rec, path: str = "measure", grid: GridSpec = DEFAULT_GRID) -> Measure:
    """Build a measure from its record; a quantile record without a grid uses ``grid``."""
    if not isinstance(rec, dict) or "kind" not in rec:
        raise SchemaError(f"{path}.kind", "missing required field")
    kind = rec["kind"]
    if kind == "empirical":
        rec = _mapping(rec, path, {"kind", "atoms", "weights"}, {"atoms"})
        atoms = _nums(rec["atoms"], f"{path}.atoms")
        if "weights" in rec:
            return EmpiricalMeasure(atoms, _nums(rec["weights"], f"{path}.weights"))
        if not atoms:
            raise SchemaError(f"{path}.atoms", "needs at least one atom")
        return EmpiricalMeasure.uniform(atoms)
    if kind == "gaussian":
        rec = _mapping(rec, path, {"kind", "mean", "variance"}, {"mean", "variance"})
        return Gaussian1D(_num(rec["mean"], f"{path}.mean"), _num(rec["variance"], f"{path}.variance"))
    if kind == "quantile":
        rec = _mapping(rec, path, {"kind", "grid", "values"}, {"values"})
        g = grid_from_record(rec["grid"], f"{path}.grid") if "grid" in rec else grid
        return QuantileMeasure(g, _nums(rec["values"], f"{path}.values"))
    raise SchemaError(f"{path}.kind", f"unknown measure kind {kind!r}")


def load_document(text: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioSyntaxError(str(getattr(exc, "problem", exc)), mark.line + 1 if mark else None) from None


def load_measure(source: str, grid: GridSpec = DEFAULT_GRID) -> Measure:
    """Read a measure from a record file, or from an inline YAML/JSON record."""
    path = Path(source)
    text = path.read_text() if path.is_file() else source
    return measure_from_record(load_document(text), "measure", grid)


# -----------------------------------------------------------------------------
# scenarios
# -----------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    agents: tuple
    schedule: TopologySchedule
    config: ConsensusConfig
    output_dir: Path
    plots: tuple = ()
    log_scale: bool = True
    seed: int | None = None

    @property
    def n(self) -> int:
        return len(self.agents)

    def to_record(self) -> dict:
        """Canonical form of everything that determines the run (output location excluded)."""
        w = self.config.weights
        weights: dict = {"scheme": w.kind}
        if w.kind == "lazy_uniform":
            weights["self_weight"] = w.self_weight
        elif w.kind == "explicit":
            weights["matrices"] = [m.tolist() for m in w.matrices]
        sched = self.schedule
        topo: dict = {"kind": sched.kind, "n": sched.n}
        if sched.kind == "static":
            topo["edges"] = [list(e) for e in sched.snapshots[0].sorted_edges()]
        elif sched.kind == "periodic":
            topo["snapshots"] = [[list(e) for e in s.sorted_edges()] for s in sched.snapshots]
        else:
            topo["base_edges"] = [list(e) for e in sorted(sched.base_edges)]
            topo["probability"] = sched.probability
        rec = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "order": self.config.order,
            "grid": grid_to_record(self.config.grid),
            "representation": self.config.representation,
            "weights": weights,
            "stop": {"epsilon": self.config.epsilon, "max_steps": self.config.max_steps},
            "topology": topo,
            "agents": [measure_to_record(m) for m in self.agents],
            "output": {"plots": list(self.plots), "log_scale": self.log_scale},
        }
        if self.seed is not None:
            rec["seed"] = self.seed
        return rec

    def hash(self) -> str:
        blob = json.dumps(self.to_record(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _edges(value, path: str, n: int) -> list:
    if not isinstance(value, list):
        raise SchemaError(path, "expected a list of [i, j] pairs")
    out = []
    for k, e in enumerate(value):
        if not (isinstance(e, list) and len(e) == 2):
            raise SchemaError(f"{path}[{k}]", "expected a pair [i, j]")
        i, j = _int(e[0], f"{path}[{k}][0]"), _int(e[1], f"{path}[{k}][1]")
        if not (0 <= i < n and 0 <= j < n):
            raise SchemaError(f"{path}[{k}]", f"node index out of range for n={n}")
        out.append((i, j))
    return out


def _schedule(rec, seed, n_agents: int) -> TopologySchedule:
    rec = _mapping(rec, "topology", {"kind", "n", "edges", "snapshots", "base_edges", "probability"},
                   {"kind", "n"})
    n = _int(rec["n"], "topology.n")
    if n != n_agents:
        raise SchemaError("topology.n", f"topology has {n} nodes but {n_agents} agents are given")
    kind = rec["kind"]
    allowed = {"static": {"edges"}, "periodic": {"snapshots"}, "random": {"base_edges", "probability"}}
    if kind not in allowed:
        raise SchemaError("topology.kind", f"unknown topology kind {kind!r}")
    for key in set(rec) - {"kind", "n"} - allowed[kind]:
        raise SchemaError(f"topology.{key}", f"not valid for a {kind} topology")
    if kind == "static":
        return TopologySchedule.static(NetworkSnapshot.from_edges(n, _edges(rec.get("edges", []), "topology.edges", n)))
    if kind == "periodic":
        snaps = rec.get("snapshots")
        if not isinstance(snaps, list) or not snaps:
            raise SchemaError("topology.snapshots", "expected a non-empty list of edge lists")
        return TopologySchedule.periodic(
            [NetworkSnapshot.from_edges(n, _edges(s, f"topology.snapshots[{k}]", n)) for k, s in enumerate(snaps)])
    if seed is None:
        raise SchemaError("seed", "a random topology needs a seed")
    if "probability" not in rec:
        raise SchemaError("topology.probability", "missing required field")
    prob = _num(rec["probability"], "topology.probability")
    if not 0.0 <= prob <= 1.0:
        raise SchemaError("topology.probability", "must lie in [0, 1]")
    return TopologySchedule.random(n, _edges(rec.get("base_edges", []), "topology.base_edges", n), prob, seed)


def _weights(rec) -> WeightScheme:
    rec = _mapping(rec, "weights", {"scheme", "self_weight", "matrices"}, {"scheme"})
    scheme = rec["scheme"]
    if scheme == "metropolis":
        _mapping(rec, "weights", {"scheme"})
        return WeightScheme("metropolis")
    if scheme == "lazy_uniform":
        _mapping(rec, "weights", {"scheme", "self_weight"}, {"self_weight"})
        return WeightScheme("lazy_uniform", self_weight=_num(rec["self_weight"], "weights.self_weight"))
    if scheme == "explicit":
        _mapping(rec, "weights", {"scheme", "matrices"}, {"matrices"})
        mats = rec["matrices"]
        if not isinstance(mats, list) or not mats:
            raise SchemaError("weights.matrices", "expected a non-empty list of matrices")
        arrays = []
        for k, m in enumerate(mats):
            if not isinstance(m, list):
                raise SchemaError(f"weights.matrices[{k}]", "expected a list of rows")
            arrays.append(np.array([_nums(r, f"weights.matrices[{k}][{i}]") for i, r in enumerate(m)]))
        return WeightScheme("explicit", matrices=tuple(arrays))
    raise SchemaError("weights.scheme", f"unknown weight scheme {scheme!r}")


def parse_scenario(text: str, base_dir: str | Path = ".") -> Scenario:
    """Parse and fully validate a scenario document.

    Relative paths (agent ``file`` references, ``output.dir``) are resolved
    against ``base_dir``.
    """
    base_dir = Path(base_dir)
    doc = load_document(text)
    doc = _mapping(doc, "", _TOP_KEYS, {"schema_version", "name", "topology", "agents"})
    if _int(doc["schema_version"], "schema_version") != SCHEMA_VERSION:
        raise SchemaError("schema_version", f"unsupported version {doc['schema_version']!r}")
    name = doc["name"]
    if not isinstance(name, str) or not name:
        raise SchemaError("name", "expected a non-empty string")

    grid = grid_from_record(doc["grid"]) if "grid" in doc else DEFAULT_GRID
    seed = _int(doc["seed"], "seed") if "seed" in doc else None

    agents_rec = doc["agents"]
    if not isinstance(agents_rec, list) or not agents_rec:
        raise SchemaError("agents", "expected a non-empty list of measures")
    agents = []
    for k, rec in enumerate(agents_rec):
        path = f"agents[{k}]"
        if isinstance(rec, dict) and "file" in rec:
            _mapping(rec, path, {"file"})
            ref = base_dir / str(rec["file"])
            if not ref.is_file():
                raise SchemaError(f"{path}.file", f"no such file: {ref}")
            rec = load_document(ref.read_text())
        agents.append(measure_from_record(rec, path, grid))

    schedule = _schedule(doc["topology"], seed, len(agents))
    weights = _weights(doc.get("weights", {"scheme": "metropolis"}))
    if weights.kind == "explicit" and any(m.shape[0] != len(agents) for m in weights.matrices):
        raise SchemaError("weights.matrices", "matrix size does not match the agent count")

    stop = _mapping(doc.get("stop", {}), "stop", {"epsilon", "max_steps"})
    representation = doc.get("representation", "quantile")
    if representation not in ("quantile", "gaussian_closed_form"):
        raise SchemaError("representation", f"unknown representation {representation!r}")
    config = ConsensusConfig(
        order=_num(doc.get("order", 2), "order"),
        grid=grid,
        weights=weights,
        epsilon=_num(stop.get("epsilon", 1e-8), "stop.epsilon"),
        max_steps=_int(stop.get("max_steps", 1000), "stop.max_steps"),
        representation=representation,
    )
    if representation == "gaussian_closed_form" and not all(isinstance(m, Gaussian1D) for m in agents):
        raise SchemaError("representation", "gaussian_closed_form needs every agent to be Gaussian")

    output = _mapping(doc.get("output", {}), "output", {"dir", "plots", "log_scale"})
    plots = output.get("plots", [])
    if not isinstance(plots, list) or any(p not in PLOT_KINDS for p in plots):
        raise SchemaError("output.plots", f"expected a list drawn from {PLOT_KINDS}")
    log_scale = output.get("log_scale", True)
    if not isinstance(log_scale, bool):
        raise SchemaError("output.log_scale", "expected true or false")
    out_dir = base_dir / str(output.get("dir", f"out/{name}"))

    return Scenario(name, tuple(agents), schedule, config, out_dir, tuple(plots), log_scale, seed)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), path.parent)


def format_number(x: float) -> str:
    """Twelve significant digits, trailing zeros kept."""
    if not math.isfinite(x):
        return repr(x)
    return format(x, "#.12g")
