"""
Weighted Wasserstein barycenters of measures on the line, and of Gaussians
in several dimensions.

In one dimension the barycenter is computed level by level on quantile
functions: for ``p = 2`` it is the weighted average of the quantile
functions, for ``p > 2`` it is the pointwise minimizer of
``sum_j w_j |y - F_j^+(u)|^p``.  The multivariate Gaussian case solves
the covariance fixed-point equation

    Q = sum_j w_j (Q^{1/2} P_j Q^{1/2})^{1/2}

by Picard iteration.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    GridMismatch,
    LengthMismatch,
    NegativeWeight,
    NoConvergence,
    NonFinite,
    NotSPD,
    OutOfDomain,
    UnsupportedOrder,
    WeightSumMismatch,
)
from .measures import (
    DEFAULT_GRID,
    EmpiricalMeasure,
    Gaussian1D,
    GridSpec,
    Measure,
    QuantileMeasure,
    check_order,
    to_quantile,
    wasserstein,
)

WEIGHT_TOL = 1e-12
ATOM_MERGE_TOL = 1e-9
EIGEN_FLOOR = 1e-14


def weight_vector(w, n: int | None = None) -> np.ndarray:
    """Validate a probability vector; sums off by less than 1e-9 are renormalized."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if n is not None and w.size != n:
        raise LengthMismatch(f"{w.size} weights for {n} measures")
    if w.size == 0:
        raise LengthMismatch("empty weight vector")
    if not np.all(np.isfinite(w)):
        raise NonFinite("weights must be finite")
    if np.any(w < 0):
        raise NegativeWeight("weights must be non-negative")
    total = w.sum()
    if abs(total - 1.0) > 1e-9:
        raise WeightSumMismatch(f"weights sum to {total!r}, expected 1")
    return w / total


def _require_p2(p: float):
    if check_order(p) != 2.0:
        raise UnsupportedOrder("closed-form barycenters are only available for p = 2")


def _pointwise_pmean(values: np.ndarray, w: np.ndarray, p: float) -> np.ndarray:
    """Per-column minimizer of ``sum_j w_j |y - values[j]|^p`` by bisection."""
    lo = values.min(axis=0)
    hi = values.max(axis=0)
    active = w > 0
    vals, ws = values[active], w[active][:, None]
    # derivative is increasing in y; 200 halvings exhaust double precision
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        d = mid - vals
        grad = np.sum(ws * np.sign(d) * np.abs(d) ** (p - 1.0), axis=0)
        pos = grad > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if np.all(hi - lo <= 4 * np.spacing(np.maximum(np.abs(lo), np.abs(hi)))):
            break
    return 0.5 * (lo + hi)


def barycenter_quantile(ms: Sequence[QuantileMeasure], w, p: float = 2.0) -> QuantileMeasure:
    """Barycenter of quantile-represented measures sharing one grid.

    For ``p = 2`` the result is ``sum_j w_j F_j^+``; for larger ``p`` each
    grid level is solved as a one-dimensional convex problem.
    """
    p = check_order(p)
    if len(ms) == 0:
        raise LengthMismatch("no measures given")
    w = weight_vector(w, len(ms))
    grid = ms[0].grid
    for m in ms[1:]:
        if m.grid != grid:
            raise GridMismatch(f"{m.grid} != {grid}")
    stacked = np.stack([m.values for m in ms])
    if p == 2.0:
        values = w @ stacked
    else:
        values = _pointwise_pmean(stacked, w, p)
    return QuantileMeasure(grid, values)


def barycenter_gaussian_1d(gs: Sequence[Gaussian1D], w, p: float = 2.0) -> Gaussian1D:
    """Scalar Gaussian barycenter: weighted mean of means and of standard deviations."""
    _require_p2(p)
    w = weight_vector(w, len(gs))
    mean = float(np.dot(w, [g.mean for g in gs]))
    std = float(np.dot(w, [g.std for g in gs]))
    return Gaussian1D.from_std(mean, std)


def quantile_to_empirical(q: QuantileMeasure, merge_tol: float = ATOM_MERGE_TOL) -> EmpiricalMeasure:
    """Collapse runs of equal grid values into atoms with mass proportional to run length."""
    v = q.values
    breaks = np.flatnonzero(np.diff(v) > merge_tol) + 1
    starts = np.concatenate(([0], breaks))
    ends = np.concatenate((breaks, [v.size]))
    atoms = np.array([v[s:e].mean() for s, e in zip(starts, ends)])
    mass = (ends - starts).astype(float)
    return EmpiricalMeasure(atoms, mass / mass.sum())


def barycenter_empirical_1d(ms: Sequence[EmpiricalMeasure], w, grid: GridSpec = DEFAULT_GRID,
                            p: float = 2.0) -> EmpiricalMeasure:
    """Empirical barycenter via quantile averaging on ``grid``.

    Exact when every cumulative weight of every input is a multiple of
    ``1/grid.size``.
    """
    _require_p2(p)
    bary = barycenter_quantile([to_quantile(m, grid) for m in ms], w)
    return quantile_to_empirical(bary)


def objective(candidate: Measure, ms: Sequence[Measure], w, p: float = 2.0,
              grid: GridSpec | None = None) -> float:
    """The minimized functional ``sum_j w_j W_p(candidate, m_j)^p``."""
    p = check_order(p)
    w = weight_vector(w, len(ms))
    return float(sum(wj * wasserstein(candidate, m, p, grid) ** p for wj, m in zip(w, ms)))


def geodesic_interpolate(a: QuantileMeasure, b: QuantileMeasure, s: float) -> QuantileMeasure:
    """Point at fraction ``s`` of the constant-speed geodesic from ``a`` to ``b``."""
    if a.grid != b.grid:
        raise GridMismatch(f"{a.grid} != {b.grid}")
    if not (0.0 <= s <= 1.0):
        raise OutOfDomain(f"interpolation parameter must lie in [0, 1], got {s!r}")
    if s == 0.0:
        return a
    if s == 1.0:
        return b
    return QuantileMeasure(a.grid, (1.0 - s) * a.values + s * b.values)


# -----------------------------------------------------------------------------
# Multivariate Gaussians
# -----------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class GaussianND:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.covariance, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise DimensionMismatch(f"covariance shape {cov.shape} does not match mean of size {mean.size}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise NonFinite("Gaussian parameters must be finite")
        _check_spd(cov)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True, eq=False)
class FixedPointReport:
    solution: GaussianND
    iterations: int
    residual: float

    def to_record(self) -> dict:
        return {"iterations": self.iterations, "residual": self.residual}


def _check_spd(a: np.ndarray):
    if np.max(np.abs(a - a.T), initial=0.0) > 1e-12:
        raise NotSPD("matrix is not symmetric")
    if np.linalg.eigvalsh(a).min() <= 0:
        raise NotSPD("matrix is not positive definite")


def sym_sqrt(a: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Square root (or inverse square root) of a symmetric PSD matrix."""
    s = 0.5 * (a + a.T)
    lam, v = np.linalg.eigh(s)
    lam = np.maximum(lam, EIGEN_FLOOR)
    r = lam ** -0.5 if inverse else np.sqrt(lam)
    out = (v * r) @ v.T
    return 0.5 * (out + out.T)


def _bures_map(q: np.ndarray, covs: Sequence[np.ndarray], w: np.ndarray):
    root = sym_sqrt(q)
    total = sum(wj * sym_sqrt(root @ c @ root) for wj, c in zip(w, covs))
    return root, total


def fixed_point_residual(q: np.ndarray, covs: Sequence[np.ndarray], w) -> float:
    """Spectral norm of ``Q - sum_j w_j (Q^{1/2} P_j Q^{1/2})^{1/2}``."""
    _, total = _bures_map(q, covs, np.asarray(w, dtype=float))
    return float(np.linalg.norm(q - total, 2))


def barycenter_gaussian_nd(gs: Sequence[GaussianND], w, tol: float = 1e-12, max_iter: int = 500,
                           init: np.ndarray | None = None) -> FixedPointReport:
    """Gaussian barycenter in R^m.

    Parameters
    ----------
    gs : sequence of GaussianND
    w : array-like
        Barycentric weights.
    tol : float
        Stop once the fixed-point residual is at most ``tol``.
    max_iter : int
        Iteration cap; exceeding it raises :class:`NoConvergence`.
    init : ndarray, optional
        SPD starting covariance.  Defaults to ``sum_j w_j P_j``.
    """
    if tol <= 0:
        raise OutOfDomain("tol must be positive")
    w = weight_vector(w, len(gs))
    dim = gs[0].dim
    if any(g.dim != dim for g in gs):
        raise DimensionMismatch("all Gaussians must share one dimension")
    covs = [g.covariance for g in gs]
    mean = sum(wj * g.mean for wj, g in zip(w, gs))
    if init is None:
        q = sum(wj * c for wj, c in zip(w, covs))
    else:
        q = np.array(init, dtype=float)
        _check_spd(q)

    iterations = 0
    while True:
        root, total = _bures_map(q, covs, w)
        residual = float(np.linalg.norm(q - total, 2))
        if residual <= tol:
            break
        if iterations >= max_iter:
            raise NoConvergence(max_iter, residual)
        inv_root = sym_sqrt(q, inverse=True)
        q = inv_root @ total @ total @ inv_root
        q = 0.5 * (q + q.T)
        iterations += 1
    return FixedPointReport(GaussianND(mean, q), iterations, residual)
