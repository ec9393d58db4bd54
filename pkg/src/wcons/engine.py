"""
Synchronous Wasserstein consensus.

At every step each agent replaces its measure by the weighted barycenter
of its neighbours' measures (itself included), all agents reading the
same time-t state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import diagnostics
from .barycenter import barycenter_gaussian_1d, barycenter_quantile
from .errors import OutOfDomain, RepresentationMismatch, SizeMismatch, UnsupportedOrder
from .measures import DEFAULT_GRID, Gaussian1D, GridSpec, Measure, QuantileMeasure, check_order, to_quantile
from .network import (
    NetworkSnapshot,
    TopologySchedule,
    check_weights,
    is_connected,
    lazy_uniform_weights,
    metropolis_weights,
    restrict_weights,
)

REPRESENTATIONS = ("quantile", "gaussian_closed_form")


@dataclass(frozen=True, eq=False)
class WeightScheme:
    """How the weight matrix for a step is derived from its snapshot.

    ``explicit`` matrices are cycled by step index, restricted to the
    snapshot's edges and renormalized row by row.
    """

    kind: str = "metropolis"
    self_weight: float = 0.5
    matrices: tuple = ()

    def __post_init__(self):
        if self.kind not in ("metropolis", "lazy_uniform", "explicit"):
            raise OutOfDomain(f"unknown weight scheme {self.kind!r}")
        if self.kind == "lazy_uniform" and not (0.0 < self.self_weight < 1.0):
            raise OutOfDomain("self_weight must lie in (0, 1)")
        if self.kind == "explicit":
            if not self.matrices:
                raise OutOfDomain("explicit scheme needs at least one matrix")
            object.__setattr__(self, "matrices", tuple(check_weights(m) for m in self.matrices))

    def matrix(self, snap: NetworkSnapshot, t: int) -> np.ndarray:
        if self.kind == "metropolis":
            return metropolis_weights(snap)
        if self.kind == "lazy_uniform":
            return lazy_uniform_weights(snap, self.self_weight)
        m = self.matrices[t % len(self.matrices)]
        if m.shape[0] != snap.n:
            raise SizeMismatch(f"explicit matrix of size {m.shape[0]} for {snap.n} agents")
        return restrict_weights(m, snap)


@dataclass(frozen=True)
class ConsensusConfig:
    order: float = 2.0
    grid: GridSpec = DEFAULT_GRID
    weights: WeightScheme = field(default_factory=WeightScheme)
    epsilon: float = 1e-8
    max_steps: int = 1000
    representation: str = "quantile"

    def __post_init__(self):
        object.__setattr__(self, "order", check_order(self.order))
        if not self.epsilon > 0:
            raise OutOfDomain("epsilon must be positive")
        if self.max_steps < 1:
            raise OutOfDomain("max_steps must be at least 1")
        if self.representation not in REPRESENTATIONS:
            raise OutOfDomain(f"unknown representation {self.representation!r}")
        if self.representation == "gaussian_closed_form" and self.order != 2.0:
            raise UnsupportedOrder("the Gaussian closed form requires p = 2")


@dataclass(frozen=True)
class ConsensusState:
    t: int
    agents: tuple

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))

    @property
    def n(self) -> int:
        return len(self.agents)


@dataclass(frozen=True, eq=False)
class RunResult:
    final: ConsensusState
    diagnostics: list
    terminated_by: str

    @property
    def steps(self) -> int:
        return self.final.t

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.diagnostics], dtype=float)


def coerce_state(state: ConsensusState, cfg: ConsensusConfig) -> ConsensusState:
    """Put every agent in the representation ``cfg`` asks for."""
    if cfg.representation == "gaussian_closed_form":
        if not all(isinstance(m, Gaussian1D) for m in state.agents):
            raise RepresentationMismatch("gaussian_closed_form needs all-Gaussian agents")
        return state
    return ConsensusState(state.t, [to_quantile(m, cfg.grid) for m in state.agents])


def _check_representation(state: ConsensusState, cfg: ConsensusConfig):
    if cfg.representation == "gaussian_closed_form":
        ok = all(isinstance(m, Gaussian1D) for m in state.agents)
    else:
        ok = all(isinstance(m, QuantileMeasure) and m.grid == cfg.grid for m in state.agents)
    if not ok:
        raise RepresentationMismatch(f"agents are not all in {cfg.representation} form on the configured grid")


def step(state: ConsensusState, snap: NetworkSnapshot, w: np.ndarray, cfg: ConsensusConfig) -> ConsensusState:
    """One synchronous round: every agent moves to its neighbourhood barycenter."""
    if snap.n != state.n:
        raise SizeMismatch(f"{state.n} agents on a graph of {snap.n} nodes")
    w = check_weights(w, snap)
    _check_representation(state, cfg)
    new = []
    for i in range(state.n):
        nbrs = snap.neighbors(i)
        row = w[i, nbrs] / w[i, nbrs].sum()
        inputs = [state.agents[j] for j in nbrs]
        if cfg.representation == "gaussian_closed_form":
            new.append(barycenter_gaussian_1d(inputs, row))
        else:
            new.append(barycenter_quantile(inputs, row, cfg.order))
    return ConsensusState(state.t + 1, new)


def predicted_limit(initial: ConsensusState | Sequence[Measure], cfg: ConsensusConfig) -> Measure:
    """Uniform-weight barycenter of the initial measures.

    This is the consensus limit only for p = 2 with doubly stochastic
    weights on a connected network; the caller is responsible for that.
    """
    if cfg.order != 2.0:
        raise UnsupportedOrder("the average-consensus limit is only claimed for p = 2")
    if not isinstance(initial, ConsensusState):
        initial = ConsensusState(0, initial)
    state = coerce_state(initial, cfg)
    w = np.full(state.n, 1.0 / state.n)
    if cfg.representation == "gaussian_closed_form":
        return barycenter_gaussian_1d(state.agents, w)
    return barycenter_quantile(state.agents, w)


def _limit_if_claimed(state: ConsensusState, sched: TopologySchedule, cfg: ConsensusConfig):
    if not sched.is_static or cfg.order != 2.0:
        return None
    snap = sched.snapshot(0)
    if not is_connected(snap):
        return None
    w = cfg.weights.matrix(snap, 0)
    if np.max(np.abs(w.sum(axis=0) - 1.0)) > 1e-10:
        return None
    return predicted_limit(state, cfg)


def run(initial: ConsensusState | Sequence[Measure], sched: TopologySchedule, cfg: ConsensusConfig,
        record_envelope: bool = True) -> RunResult:
    """Iterate :func:`step` until the diameter drops to ``cfg.epsilon`` or ``cfg.max_steps`` is hit."""
    if not isinstance(initial, ConsensusState):
        initial = ConsensusState(0, initial)
    if initial.n != sched.n:
        raise SizeMismatch(f"{initial.n} agents for a schedule on {sched.n} nodes")
    state = coerce_state(initial, cfg)
    limit = _limit_if_claimed(state, sched, cfg)

    def snap_record(s):
        return diagnostics.record(s, cfg.order, cfg.grid, limit, record_envelope)

    history = [snap_record(state)]
    while True:
        if history[-1].diameter <= cfg.epsilon:
            terminated_by = "converged"
            break
        if state.t >= cfg.max_steps:
            terminated_by = "max_steps"
            break
        snap = sched.snapshot(state.t)
        state = step(state, snap, cfg.weights.matrix(snap, state.t), cfg)
        history.append(snap_record(state))
    return RunResult(state, history, terminated_by)
