"""
Undirected communication graphs, consensus weight matrices and their spectra.

Every node carries an implicit self-loop, so agent ``i`` always counts
itself among its neighbours.  Weight matrices are row-stochastic with a
strictly positive diagonal and support exactly on edges plus the
diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EigenFailure, OutOfDomain, SizeMismatch, SparsityMismatch, ValidationError

ROW_SUM_TOL = 1e-12


def _edge(i: int, j: int) -> tuple:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class NetworkSnapshot:
    """One time step's graph on ``n`` nodes; edges are unordered pairs."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise OutOfDomain("a network needs at least one node")
        norm = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise OutOfDomain(f"edge ({i}, {j}) out of range for n={self.n}")
            if i != j:
                norm.add(_edge(i, j))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable) -> "NetworkSnapshot":
        return cls(n, frozenset(tuple(e) for e in edges))

    @classmethod
    def path(cls, n: int) -> "NetworkSnapshot":
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def cycle(cls, n: int) -> "NetworkSnapshot":
        return cls.from_edges(n, [(i, (i + 1) % n) for i in range(n)])

    @classmethod
    def star(cls, n: int) -> "NetworkSnapshot":
        return cls.from_edges(n, [(0, i) for i in range(1, n)])

    @classmethod
    def complete(cls, n: int) -> "NetworkSnapshot":
        return cls.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])

    def adjacency(self) -> np.ndarray:
        """0/1 adjacency including the implicit self-loops."""
        a = np.eye(self.n, dtype=bool)
        for i, j in self.edges:
            a[i, j] = a[j, i] = True
        return a

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1) - 1

    def neighbors(self, i: int) -> list:
        """Neighbour set of ``i`` including ``i`` itself, ascending."""
        return sorted({i} | {b for a, b in self.edges if a == i} | {a for a, b in self.edges if b == i})

    def sorted_edges(self) -> list:
        return sorted(self.edges)


def check_weights(w: np.ndarray, snap: NetworkSnapshot | None = None) -> np.ndarray:
    """Check row-stochasticity, positive diagonal and (optionally) sparsity."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValidationError(f"weight matrix must be square, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValidationError("weights must be finite and non-negative")
    if np.any(np.diag(w) <= 0):
        raise ValidationError("diagonal weights must be strictly positive")
    if np.max(np.abs(w.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
        raise ValidationError("weight matrix rows must sum to 1")
    if snap is not None:
        if snap.n != w.shape[0]:
            raise SizeMismatch(f"matrix of size {w.shape[0]} for a graph on {snap.n} nodes")
        if not np.array_equal(w > 0, snap.adjacency()):
            raise SparsityMismatch("weights must be positive exactly on edges and the diagonal")
    return w


def metropolis_weights(g: NetworkSnapshot) -> np.ndarray:
    """Metropolis-Hastings weights: symmetric, doubly stochastic, positive diagonal."""
    d = g.degrees()
    w = np.zeros((g.n, g.n))
    for i, j in g.edges:
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(d[i], d[j]))
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return w


def lazy_uniform_weights(g: NetworkSnapshot, self_weight: float) -> np.ndarray:
    """Keep ``self_weight`` and split the rest equally among neighbours."""
    if not (0.0 < self_weight < 1.0):
        raise OutOfDomain(f"self_weight must lie in (0, 1), got {self_weight!r}")
    d = g.degrees()
    w = np.zeros((g.n, g.n))
    for i, j in g.edges:
        w[i, j] = (1.0 - self_weight) / d[i]
        w[j, i] = (1.0 - self_weight) / d[j]
    for i in range(g.n):
        w[i, i] = self_weight if d[i] > 0 else 1.0
    return w


def restrict_weights(w: np.ndarray, g: NetworkSnapshot) -> np.ndarray:
    """Zero weights on absent edges and renormalize each row over what remains."""
    w = np.where(g.adjacency(), np.asarray(w, dtype=float), 0.0)
    rows = w.sum(axis=1, keepdims=True)
    if np.any(rows <= 0):
        raise SparsityMismatch("a row lost all of its weight")
    return w / rows


def is_connected(g: NetworkSnapshot) -> bool:
    adj = {i: [] for i in range(g.n)}
    for i, j in g.edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == g.n


def union_graph(snaps: Sequence[NetworkSnapshot]) -> NetworkSnapshot:
    if not snaps:
        raise SizeMismatch("cannot take the union of no graphs")
    n = snaps[0].n
    if any(s.n != n for s in snaps):
        raise SizeMismatch("all snapshots must have the same number of nodes")
    return NetworkSnapshot(n, frozenset().union(*(s.edges for s in snaps)))


@dataclass(frozen=True)
class TopologySchedule:
    """Source of one :class:`NetworkSnapshot` per time step.

    ``static`` repeats one graph, ``periodic`` cycles through a list, and
    ``random`` keeps each base edge independently with ``probability``,
    drawn from a generator seeded by ``(seed, t)`` so that the snapshot at
    any step can be regenerated on its own.
    """

    kind: str
    n: int
    snapshots: tuple = ()
    base_edges: frozenset = frozenset()
    probability: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("static", "periodic", "random"):
            raise OutOfDomain(f"unknown schedule kind {self.kind!r}")
        if self.kind in ("static", "periodic"):
            if not self.snapshots:
                raise OutOfDomain("periodic schedule needs at least one snapshot")
            if self.kind == "static" and len(self.snapshots) != 1:
                raise OutOfDomain("static schedule takes exactly one snapshot")
            if any(s.n != self.n for s in self.snapshots):
                raise SizeMismatch("all snapshots must have the schedule's node count")
        else:
            if self.seed is None:
                raise OutOfDomain("random schedule needs a seed")
            if not (0.0 <= self.probability <= 1.0):
                raise OutOfDomain("edge probability must lie in [0, 1]")
            object.__setattr__(self, "base_edges", NetworkSnapshot(self.n, frozenset(self.base_edges)).edges)

    @classmethod
    def static(cls, g: NetworkSnapshot) -> "TopologySchedule":
        return cls("static", g.n, (g,))

    @classmethod
    def periodic(cls, snaps: Sequence[NetworkSnapshot]) -> "TopologySchedule":
        return cls("periodic", snaps[0].n, tuple(snaps))

    @classmethod
    def random(cls, n: int, base_edges, probability: float, seed: int) -> "TopologySchedule":
        return cls("random", n, base_edges=frozenset(tuple(e) for e in base_edges),
                   probability=probability, seed=seed)

    @property
    def is_static(self) -> bool:
        return self.kind == "static"

    def snapshot(self, t: int) -> NetworkSnapshot:
        if self.kind != "random":
            return self.snapshots[t % len(self.snapshots)]
        rng = np.random.default_rng([self.seed, t])
        edges = sorted(self.base_edges)
        keep = rng.random(len(edges)) < self.probability
        return NetworkSnapshot(self.n, frozenset(e for e, k in zip(edges, keep) if k))


def jointly_connected(sched: TopologySchedule, window: int, horizon: int) -> bool:
    """Whether each block ``[k*window, (k+1)*window)`` inside ``[0, horizon)`` has a connected union.

    A finite-horizon certificate only: it says nothing beyond ``horizon``.
    """
    if window < 1 or horizon < window:
        raise OutOfDomain("need window >= 1 and horizon >= window")
    for start in range(0, horizon - window + 1, window):
        block = [sched.snapshot(t) for t in range(start, start + window)]
        if not is_connected(union_graph(block)):
            return False
    return True


@dataclass(frozen=True, eq=False)
class SpectralReport:
    moduli: np.ndarray
    second_largest: float
    is_doubly_stochastic: bool

    @property
    def spectral_gap(self) -> float:
        return 1.0 - self.second_largest


def spectral_report(w: np.ndarray) -> SpectralReport:
    """Eigenvalue moduli of a row-stochastic matrix, largest first."""
    w = check_weights(w)
    try:
        if np.allclose(w, w.T, atol=1e-14, rtol=0):
            eig = np.linalg.eigvalsh(0.5 * (w + w.T))
        else:
            eig = np.linalg.eigvals(w)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    moduli = np.sort(np.abs(eig))[::-1]
    if abs(moduli[0] - 1.0) > 1e-9:
        raise EigenFailure(f"leading eigenvalue modulus {moduli[0]!r} is not 1")
    doubly = bool(np.max(np.abs(w.sum(axis=0) - 1.0)) <= 1e-10)
    second = float(moduli[1]) if moduli.size > 1 else 0.0
    return SpectralReport(moduli, second, doubly)
