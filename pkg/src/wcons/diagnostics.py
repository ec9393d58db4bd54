"""
Run instrumentation: the Lyapunov function (largest pairwise W_p^p among
agents), the diameter, per-level quantile envelopes, and geometric rate
fits of diameter sequences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InsufficientData
from .measures import (
    DEFAULT_GRID,
    Gaussian1D,
    GridSpec,
    Measure,
    QuantileMeasure,
    check_order,
    to_quantile,
    wasserstein,
)

RATE_FLOOR = 100 * np.finfo(float).eps
HULL_SLACK = 1e-9
MIN_FIT_POINTS = 10


class Envelope(NamedTuple):
    """Per-level lower and upper bounds of a set of quantile functions."""

    lower: np.ndarray
    upper: np.ndarray

    def contains(self, other: "Envelope", slack: float = HULL_SLACK) -> bool:
        return bool(np.all(other.lower >= self.lower - slack) and np.all(other.upper <= self.upper + slack))


@dataclass(frozen=True, eq=False)
class DiagnosticsRecord:
    t: int
    lyapunov: float
    diameter: float
    dist_to_limit: float | None = None
    envelope: Envelope | None = None


@dataclass(frozen=True)
class RateFit:
    fitted_rate: float
    reference_rate: float
    fit_window: tuple
    r_squared: float

    @property
    def relative_error(self) -> float:
        return abs(self.fitted_rate - self.reference_rate) / self.reference_rate


def _agents(state) -> list:
    return list(getattr(state, "agents", state))


def pairwise_costs(agents: Sequence[Measure], p: float = 2.0, grid: GridSpec | None = None) -> np.ndarray:
    """Symmetric matrix of ``W_p(mu_i, mu_j)^p``."""
    p = check_order(p)
    n = len(agents)
    if n and all(isinstance(m, QuantileMeasure) for m in agents) and len({m.grid for m in agents}) == 1 \
            and (grid is None or grid == agents[0].grid):
        x = np.stack([m.values for m in agents])
        diff = np.abs(x[:, None, :] - x[None, :, :])
        step = agents[0].grid.step
        return (np.sum(diff * diff, axis=2) if p == 2.0 else np.sum(diff ** p, axis=2)) * step
    if p == 2.0 and all(isinstance(m, Gaussian1D) for m in agents):
        mu = np.array([m.mean for m in agents])
        sd = np.array([m.std for m in agents])
        return (mu[:, None] - mu[None, :]) ** 2 + (sd[:, None] - sd[None, :]) ** 2
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = wasserstein(agents[i], agents[j], p, grid) ** p
    return out


def lyapunov(state, p: float = 2.0, grid: GridSpec | None = None) -> float:
    """Largest ``W_p^p`` over all agent pairs; zero exactly at consensus."""
    costs = pairwise_costs(_agents(state), p, grid)
    return float(costs.max()) if costs.size else 0.0


def diameter(state, p: float = 2.0, grid: GridSpec | None = None) -> float:
    return lyapunov(state, p, grid) ** (1.0 / check_order(p))


def envelope(state, grid: GridSpec = DEFAULT_GRID) -> Envelope:
    """Component-wise min and max of the agents' quantile values."""
    x = np.stack([to_quantile(m, grid).values for m in _agents(state)])
    return Envelope(x.min(axis=0), x.max(axis=0))


def hull_membership(final: Measure, initial, grid: GridSpec = DEFAULT_GRID,
                    slack: float = HULL_SLACK) -> bool:
    """Whether ``final`` lies inside the per-level envelope of the initial agents."""
    env = envelope(initial, grid)
    v = to_quantile(final, grid).values
    return bool(np.all(v >= env.lower - slack) and np.all(v <= env.upper + slack))


def record(state, p: float = 2.0, grid: GridSpec = DEFAULT_GRID, limit: Measure | None = None,
           with_envelope: bool = True) -> DiagnosticsRecord:
    agents = _agents(state)
    nu = lyapunov(agents, p, grid)
    dist = None
    if limit is not None:
        dist = max(wasserstein(m, limit, p, grid) for m in agents)
    env = envelope(agents, grid) if with_envelope else None
    return DiagnosticsRecord(getattr(state, "t", 0), nu, nu ** (1.0 / p), dist, env)


def fit_rate(diameters: Sequence[float], reference: float, window: tuple | None = None) -> RateFit:
    """Fit ``d(t) ~ C * rate**t`` by least squares on ``log d``.

    Parameters
    ----------
    diameters : sequence of float
        Diameter at steps ``0, 1, 2, ...``.
    reference : float
        Rate to compare against, typically the second-largest eigenvalue
        modulus of the weight matrix.
    window : (int, int), optional
        Inclusive step range to fit.  By default the tail half of the steps
        whose diameter is above ``100 * eps`` is used.
    """
    d = np.asarray(diameters, dtype=float)
    t = np.arange(d.size)
    usable = d > RATE_FLOOR
    if window is not None:
        usable &= (t >= window[0]) & (t <= window[1])
    idx = t[usable]
    if idx.size < MIN_FIT_POINTS:
        raise InsufficientData(f"need {MIN_FIT_POINTS} usable points, got {idx.size}")
    if window is None:
        idx = idx[idx.size // 2:]
    y = np.log(d[idx])
    slope, intercept = np.polyfit(idx.astype(float), y, 1)
    resid = y - (slope * idx + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r2 = 1.0 if ss_tot == 0.0 or ss_res <= 1e-24 * max(ss_tot, 1.0) else 1.0 - ss_res / ss_tot
    return RateFit(math.exp(slope), float(reference), (int(idx[0]), int(idx[-1])), r2)
