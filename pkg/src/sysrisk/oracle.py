"""Brute-force grid references, kept independent of the solvers.

Aggregation values, acceptance membership and support values are recomputed
here from their definitions (separate code paths from the operational
modules): Value at Risk by direct mass counting, Expected Shortfall by
midpoint quadrature of the level integral on a partition refined at the
distribution's probability atoms (exact for the piecewise-constant
integrand), and support values by enumeration over scenario grids.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .acceptance import AcceptanceSpec
from .aggregation import AggregationSpec
from .errors import ValidationError
from .scenario import RandomVector, ScenarioSpace

NEG_INF = float("-inf")
POS_INF = float("inf")


@dataclass(frozen=True)
class GridSpec:
    """Per-dimension bounds and point counts for a product grid."""

    bounds: tuple
    counts: tuple

    def __post_init__(self):
        if len(self.bounds) != len(self.counts):
            raise ValidationError("grid bounds and counts must align")
        for (lo, hi), c in zip(self.bounds, self.counts):
            if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
                raise ValidationError("grid bounds must be finite with hi > lo")
            if c < 3:
                raise ValidationError("grids need at least 3 points per dimension")

    @classmethod
    def uniform(cls, lo: float, hi: float, count: int, dims: int) -> "GridSpec":
        return cls(tuple((lo, hi) for _ in range(dims)), tuple(count for _ in range(dims)))

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, c) for (lo, hi), c in zip(self.bounds, self.counts)]

    def steps(self) -> np.ndarray:
        return np.array([(hi - lo) / (c - 1) for (lo, hi), c in zip(self.bounds, self.counts)])

    def points(self) -> np.ndarray:
        axes = self.axes()
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))


# ---------------------------------------------------------------------------
# re-derived evaluation paths


def _utility_value(u, x: np.ndarray) -> np.ndarray:
    if u.kind == "exponential":
        return 1.0 - np.exp(-u.gamma * x)
    if u.kind == "power":
        pos = np.maximum(x, 0.0)
        if u.eta == 1.0:
            branch = np.log1p(pos)
        else:
            branch = (np.power(1.0 + pos, 1.0 - u.eta) - 1.0) / (1.0 - u.eta)
        return np.minimum(x, 0.0) + branch
    return u.slope_neg * np.minimum(x, 0.0) + u.slope_pos * np.maximum(x, 0.0)


def aggregate_columns(agg: AggregationSpec, M: np.ndarray) -> np.ndarray:
    """Aggregation value per scenario column, recomputed from the kind data."""
    if agg.kind == "sum":
        return M.sum(axis=0)
    if agg.kind == "sum_of_losses":
        return np.where(M < 0.0, M, 0.0).sum(axis=0)
    if agg.kind == "utility_of_sum":
        return _utility_value(agg.utility, M.sum(axis=0))
    if agg.kind == "componentwise_utility":
        return np.sum([_utility_value(u, M[i]) for i, u in enumerate(agg.utilities)], axis=0)
    return np.array([agg.fn(M[:, j]) for j in range(M.shape[1])], dtype=float)


def var_oracle(U: np.ndarray, probs: np.ndarray, level: float) -> float:
    """Value at Risk by direct mass counting over candidate thresholds."""
    best = None
    for v in np.sort(U):
        if float(probs[U < v].sum()) <= level + 1e-15:
            best = v
    return -float(best)


def es_oracle(U: np.ndarray, probs: np.ndarray, level: float,
              base_points: int = 64) -> float:
    """Level integral of Value at Risk by midpoint quadrature; the uniform
    level grid is refined at the cumulative probability atoms so the midpoint
    rule is exact for the piecewise-constant integrand."""
    edges = set(np.linspace(0.0, level, base_points + 1).tolist())
    cum = np.cumsum(np.asarray(probs, dtype=float)[np.argsort(U, kind="stable")])
    for c in cum[:-1]:
        if 0.0 < c < level:
            edges.add(float(c))
    edges = np.array(sorted(edges))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += var_oracle(U, probs, 0.5 * (a + b)) * (b - a)
    return total / level


def acceptable(acc: AcceptanceSpec, U: np.ndarray, tol: float = 1e-9) -> bool:
    p = acc.space.probs
    if acc.kind == "nonnegative":
        return bool(U.min() >= -tol)
    if acc.kind == "expectation_floor":
        return float(p @ U) >= acc.u0 - tol
    if acc.kind == "expected_shortfall":
        return es_oracle(U, p, acc.level) <= tol
    return bool(np.all(acc.weights @ (p * U) >= acc.floors - tol))


# ---------------------------------------------------------------------------
# grid references


def default_m_grid(X: RandomVector, count: int = 101) -> GridSpec:
    pad = 2.0 + float(np.ptp(X.values))
    r = float(np.abs(X.values).max()) + pad
    return GridSpec.uniform(-r, r, count, X.d)


def rho_grid(X: RandomVector, agg: AggregationSpec, acc: AcceptanceSpec,
             space: ScenarioSpace, grid: GridSpec) -> float:
    """Exhaustive minimization of the total injection over the grid."""
    if X.d > 3:
        raise ValidationError("grid reference is limited to d <= 3")
    if len(grid.counts) != X.d:
        raise ValidationError("grid dimensionality must match the institution count")
    best = POS_INF
    for m in grid.points():
        U = aggregate_columns(agg, X.values + m[:, None])
        if acceptable(acc, U):
            s = float(m.sum())
            if s < best:
                best = s
    return best


def _inner_tables(agg: AggregationSpec, Zv: np.ndarray, xgrid: np.ndarray
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Per-scenario arrays: A[x] = aggregation value, B[w, x] = <x, Z(:, w)>."""
    A = aggregate_columns(agg, xgrid.T)
    B = xgrid @ Zv  # (Nx, n)
    return A, B


def _candidate_scales(Zv: np.ndarray) -> np.ndarray:
    cands = [Zv.max(axis=0), np.abs(Zv).mean(axis=0), np.abs(Zv).sum(axis=0),
             np.full(Zv.shape[1], max(float(Zv.max()), 0.0)),
             np.full(Zv.shape[1], max(float(Zv.mean()), 0.0))]
    rows = [s * c for c in cands for s in (0.5, 1.0, 2.0)]
    return np.vstack(rows)


def alpha_raw_grid(Z, agg: AggregationSpec, acc: AcceptanceSpec,
                   space: ScenarioSpace, grid: GridSpec,
                   w_max: float | None = None) -> float:
    """Penalty from its raw definition: sup over gridded barrier directions of
    the support value plus the gridded inner minimization over positions.

    The inner minimum over positions separates across scenarios because the
    objective is a sum of per-scenario terms, so each scenario is minimized
    over its own d-dimensional grid. Data-driven candidate directions are
    appended to the direction grid so thin feasibility sets are represented.
    """
    Zv = np.atleast_2d(np.asarray(Z.values if hasattr(Z, "values") else Z, dtype=float))
    d, n = Zv.shape
    if d * n > 6:
        raise ValidationError("raw penalty grid is limited to d*n <= 6")
    if np.any(Zv < 0.0):
        return NEG_INF
    p = space.probs
    scale = max(1.0, float(np.abs(Zv).max()))
    if w_max is None:
        w_max = 4.0 * scale
    xgrid = grid.points()  # (Nx, d)
    A, B = _inner_tables(agg, Zv, xgrid)

    wcount = max(grid.counts)
    waxis = np.linspace(0.0, w_max, wcount)

    def inner_min(w_idx: int, wvals: np.ndarray) -> np.ndarray:
        # min over the position grid of B[:, w_idx] - A * w, vectorized in w
        return (B[:, [w_idx]] - A[:, None] * wvals[None, :]).min(axis=0)

    def total_for(Wrows: np.ndarray, sigma: np.ndarray) -> float:
        vals = np.empty(Wrows.shape[0])
        for w_idx in range(n):
            col = inner_min(w_idx, Wrows[:, w_idx])
            if w_idx == 0:
                vals = p[w_idx] * col
            else:
                vals = vals + p[w_idx] * col
        vals = vals + sigma
        return float(vals.max()) if vals.size else NEG_INF

    if acc.kind == "nonnegative":
        total = 0.0
        for w_idx in range(n):
            wv = np.concatenate([waxis, _candidate_scales(Zv)[:, w_idx]])
            total += p[w_idx] * float(inner_min(w_idx, wv).max())
        return min(total, 0.0)
    if acc.kind == "expectation_floor":
        lams = np.concatenate([waxis, np.unique(_candidate_scales(Zv).ravel())])
        Wrows = np.repeat(lams[:, None], n, axis=1)
        return total_for(Wrows, acc.u0 * lams)
    if acc.kind == "expected_shortfall":
        axes = [waxis] * n
        Wrows = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        Wrows = np.vstack([Wrows, np.clip(_candidate_scales(Zv), 0.0, None)])
        bound = (Wrows @ p) / acc.level
        Wrows = Wrows[(Wrows <= bound[:, None] + 1e-12).all(axis=1)]
        return total_for(Wrows, np.zeros(Wrows.shape[0]))
    # polyhedral: grid over generator coefficients; the support part is the
    # floor combination, absorbed by the supremum over representations
    k = acc.weights.shape[0]
    caxis = np.linspace(0.0, w_max / max(1.0, float(acc.weights.max())), min(wcount, 41))
    coefs = np.stack(np.meshgrid(*([caxis] * k), indexing="ij"), axis=-1).reshape(-1, k)
    fit, *_ = np.linalg.lstsq(acc.weights.T, Zv.max(axis=0), rcond=None)
    extra = np.vstack([s * np.maximum(fit, 0.0) for s in (0.5, 1.0, 2.0)])
    coefs = np.vstack([coefs, extra])
    Wrows = coefs @ acc.weights
    return total_for(Wrows, coefs @ acc.floors)


def saddle_grid(Z, agg: AggregationSpec, acc: AcceptanceSpec,
                space: ScenarioSpace, grid: GridSpec,
                radius: float = 6.0) -> tuple[float, float]:
    """Both iterated optimizations of the pairing Lagrangian on product grids,
    with all ingredients recomputed from definitions."""
    Zv = np.atleast_2d(np.asarray(Z.values if hasattr(Z, "values") else Z, dtype=float))
    d, n = Zv.shape
    if d * n > 6:
        raise ValidationError("saddle grid is limited to d*n <= 6")
    p = space.probs
    count = min(grid.counts)
    axes = [np.linspace(-radius, radius, count)] * (d * n)
    Xpts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d * n)
    scale = max(1.0, float(np.abs(Zv).max()))

    if acc.kind == "expectation_floor":
        lams = np.linspace(0.0, 4.0 * scale, count * count)
        Wrows = np.repeat(lams[:, None], n, axis=1)
        sigma = acc.u0 * lams
    elif acc.kind == "polyhedral":
        k = acc.weights.shape[0]
        caxis = np.linspace(0.0, 4.0 * scale / max(1.0, float(acc.weights.max())), count)
        coefs = np.stack(np.meshgrid(*([caxis] * k), indexing="ij"), axis=-1).reshape(-1, k)
        Wrows = coefs @ acc.weights
        sigma = coefs @ acc.floors
    else:
        waxes = [np.linspace(0.0, 4.0 * scale, count)] * n
        Wrows = np.stack(np.meshgrid(*waxes, indexing="ij"), axis=-1).reshape(-1, n)
        if acc.kind == "expected_shortfall":
            bound = (Wrows @ p) / acc.level
            Wrows = Wrows[(Wrows <= bound[:, None] + 1e-12).all(axis=1)]
        sigma = np.zeros(Wrows.shape[0])
    extra = np.clip(_candidate_scales(Zv), 0.0, None)
    if acc.kind == "nonnegative":
        Wrows = np.vstack([Wrows, extra])
        sigma = np.concatenate([sigma, np.zeros(extra.shape[0])])
    elif acc.kind == "expected_shortfall":
        bound = (extra @ p) / acc.level
        ok = (extra <= bound[:, None] + 1e-12).all(axis=1)
        Wrows = np.vstack([Wrows, extra[ok]])
        sigma = np.concatenate([sigma, np.zeros(int(ok.sum()))])

    pair = Xpts @ (p[None, :] * Zv).ravel()
    lam_vals = np.empty((Xpts.shape[0], n))
    for idx in range(Xpts.shape[0]):
        lam_vals[idx] = aggregate_columns(agg, Xpts[idx].reshape(d, n))
    B = lam_vals * p[None, :]

    inf_sup = POS_INF
    sup_inf = np.full(Wrows.shape[0], POS_INF)
    chunk = max(1, int(2e7) // max(1, Wrows.shape[0]))
    for s in range(0, Xpts.shape[0], chunk):
        K = pair[s:s + chunk, None] + sigma[None, :] - B[s:s + chunk] @ Wrows.T
        inf_sup = min(inf_sup, float(K.max(axis=1).min()))
        sup_inf = np.minimum(sup_inf, K.min(axis=0))
    return inf_sup, float(sup_inf.max())
