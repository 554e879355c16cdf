"""Dual side: support function of the systemic acceptance set, penalty
functions over barrier-cone directions, and duality-gap reporting.

Two independent evaluation routes are kept:

* a multiplier route that maximizes, over barrier-cone directions W, the
  concave function sigma_A(W) + inf_m { sum(m) - E[Lambda(X+m) W] } with a
  cutting-plane scheme; every evaluation is a certified lower bound on the
  primal value by weak duality, and the route is exact in the linear,
  conic, polyhedral and expected-shortfall cases;
* a direct route that evaluates the support function of the systemic
  acceptance set by convex minimization over scenario positions and feeds
  a Frank-Wolfe ascent over the product of scenario simplices.

The reported dual value is the best certified value found.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .acceptance import AcceptanceSpec
from .aggregation import AggregationSpec
from .errors import IndeterminateValueError, ValidationError
from .optim import bisect_threshold, golden_max, scan_then_golden_max
from .primal import (PrimalResult, STATUS_OPTIMAL, STATUS_TOL,
                     constraint_value_and_weights, es_tail_weights, rho,
                     rho_tilde)
from .scenario import (DualVector, RandomVariable, RandomVector,
                       ScenarioSpace, pairing)
from .simplex import solve_lp

NEG_INF = float("-inf")
POS_INF = float("inf")
UNBOUNDED_CAP = 1e9
_HUGE = 1e12


@dataclass
class PenaltyEval:
    value: float
    w_star: Optional[RandomVariable]
    strict_positive_branch: bool


@dataclass
class DualityReport:
    primal: PrimalResult
    dual_value: float
    Z_star: Optional[DualVector]
    W_star: Optional[RandomVariable]
    gap_abs: float
    gap_rel: float
    mode: str
    degenerate: bool = False
    converged: bool = True

    @staticmethod
    def build(primal: PrimalResult, dual_value: float, Z_star, W_star, mode: str,
              degenerate: bool = False, converged: bool = True) -> "DualityReport":
        if degenerate or not math.isfinite(primal.value) or not math.isfinite(dual_value):
            gap_abs = math.nan if degenerate else abs(primal.value - dual_value)
            gap_rel = math.nan
        else:
            gap_abs = abs(primal.value - dual_value)
            gap_rel = gap_abs / max(1.0, abs(primal.value))
        return DualityReport(primal, dual_value, Z_star, W_star, gap_abs, gap_rel,
                             mode, degenerate, converged)


@dataclass
class SupportEval:
    value: float          # best feasible objective (upper bound for the infimum)
    lower_bound: float    # certified lower bound from the cut relaxation
    X_star: Optional[np.ndarray]
    status: str
    iterations: int


# ---------------------------------------------------------------------------
# support function of the systemic acceptance set


def support_systemic(Z: DualVector, agg: AggregationSpec, acc: AcceptanceSpec,
                     space: ScenarioSpace, tol: float = 1e-7,
                     max_iter: int = 400) -> float:
    res = _support_systemic_full(Z, agg, acc, space, tol=tol, max_iter=max_iter)
    if res.status == "indeterminate":
        raise IndeterminateValueError(
            f"support solve hit the iteration limit with bounds "
            f"[{res.lower_bound}, {res.value}]")
    if res.status == "unbounded":
        return NEG_INF
    return res.value


def _support_systemic_full(Z: DualVector, agg: AggregationSpec, acc: AcceptanceSpec,
                           space: ScenarioSpace, tol: float = 1e-7,
                           max_iter: int = 400) -> SupportEval:
    d, n = agg.d, space.n
    if Z.d != d or Z.n != n:
        raise ValidationError("dual vector dimensions disagree with the configuration")
    Zv = Z.values
    scale = 1.0 + float(np.abs(Zv).max())
    # the systemic acceptance set is monotone, so any negative dual component
    # admits an unbounded improving bump
    if np.any(Zv < -1e-12 * scale):
        return SupportEval(NEG_INF, NEG_INF, None, "unbounded", 0)
    c = (space.probs[None, :] * Zv).ravel()

    def g_and_sub(x: np.ndarray) -> tuple[float, np.ndarray]:
        M = x.reshape(d, n)
        U = agg._eval_matrix(M)
        g, tau = constraint_value_and_weights(acc, U)
        S = np.zeros((d, n))
        for w in np.flatnonzero(tau > 0.0):
            S[:, w] = -tau[w] * agg.supergradient(M[:, w])
        return g, S.ravel()

    def gval(x: np.ndarray) -> float:
        return constraint_value_and_weights(acc, agg._eval_matrix(x.reshape(d, n)))[0]

    def push(x: np.ndarray) -> Optional[tuple[np.ndarray, float]]:
        if gval(x) <= 0.0:
            return x, float(c @ x)
        t = 1.0
        while gval(x + t) > 0.0:
            t *= 2.0
            if t > 4.0 * UNBOUNDED_CAP:
                return None
        tstar = bisect_threshold(lambda tt: gval(x + tt) <= 0.0, 0.0, t, tol=1e-13)
        xf = x + tstar
        return xf, float(c @ xf)

    return _kelley_min(c, g_and_sub, gval, push, d * n, scale, tol, max_iter)


def _kelley_min(c: np.ndarray, g_and_sub, gval, push, nvar: int, scale: float,
                tol: float, max_iter: int) -> SupportEval:
    """Cutting-plane minimization of a linear objective over {g <= 0}."""
    start = push(np.zeros(nvar))
    if start is None:
        return SupportEval(POS_INF, POS_INF, None, "infeasible", 0)
    x_best, ub = start
    lb = NEG_INF
    box = max(16.0, 8.0 * scale, 2.0 * abs(ub))
    cuts_s: list[np.ndarray] = []
    cuts_r: list[float] = []
    g0, s0 = g_and_sub(x_best)
    cuts_s.append(s0)
    cuts_r.append(float(s0 @ x_best - g0))

    def master(B: float):
        k = len(cuts_s)
        A = np.zeros((k + nvar, nvar))
        b = np.zeros(k + nvar)
        for i in range(k):
            A[i] = cuts_s[i]
            b[i] = cuts_r[i] + B * float(cuts_s[i].sum())
        A[k:] = np.eye(nvar)
        b[k:] = 2.0 * B
        res = solve_lp(c, A_ub=A, b_ub=b)
        if res.status != "optimal":
            return None, True
        x = res.x - B
        hit = bool(np.any(np.abs(x) >= B * (1.0 - 1e-9)))
        return x, hit

    def master_certified():
        nonlocal box
        while True:
            x, hit = master(box)
            if x is None:
                box *= 4.0
                if box > 8.0 * UNBOUNDED_CAP:
                    return None, False, True
                continue
            if not hit:
                return x, True, False
            cand = float(c @ x)
            if cand < -UNBOUNDED_CAP:
                return x, False, True
            box *= 4.0
            x2, _ = master(box)
            if x2 is None:
                continue
            cand2 = float(c @ x2)
            if cand2 >= cand - 1e-9 * (1.0 + abs(cand)):
                return x, True, False
            if cand2 < -UNBOUNDED_CAP:
                return x2, False, True

    iters = 0
    while iters < max_iter:
        iters += 1
        x_lp, lb_valid, maybe_unbounded = master_certified()
        if maybe_unbounded:
            if x_lp is not None and _confirm_ray(x_lp, push):
                return SupportEval(NEG_INF, NEG_INF, None, "unbounded", iters)
            if x_lp is None:
                break
        cand = float(c @ x_lp)
        if lb_valid:
            lb = max(lb, cand)
        g, s = g_and_sub(x_lp)
        if g <= 1e-12 * scale:
            if cand < ub:
                ub, x_best = cand, x_lp
        else:
            cuts_s.append(s)
            cuts_r.append(float(s @ x_lp - g))
            pushed = push(x_lp)
            if pushed is not None and pushed[1] < ub:
                x_best, ub = pushed
        if ub - lb <= tol * max(1.0, abs(ub)):
            return SupportEval(ub, lb, x_best, "optimal", iters)
        if lb < -UNBOUNDED_CAP and _confirm_ray(x_lp, push):
            return SupportEval(NEG_INF, NEG_INF, None, "unbounded", iters)
    return SupportEval(ub, lb, x_best, "indeterminate", iters)


def _confirm_ray(point: np.ndarray, push) -> bool:
    nrm = float(np.linalg.norm(point))
    if nrm <= 0.0:
        return False
    dvec = point / nrm
    last = None
    for t in (1e3, 1e6, 1e9, 1e11):
        pushed = push(t * dvec)
        if pushed is None:
            return False
        if last is not None and pushed[1] >= last:
            return False
        last = pushed[1]
    return last is not None and last < -UNBOUNDED_CAP


# ---------------------------------------------------------------------------
# penalty functions over barrier-cone directions


def _phi_terms(agg: AggregationSpec, Zv: np.ndarray, probs: np.ndarray,
               W: np.ndarray, tol: float, strict: bool) -> float:
    """sum_w p_w * W_w * conj(Z(:,w) / W_w) with the zero-scale conventions:
    a zero scale contributes 0 on columns where Z vanishes and kills the
    direction elsewhere; the strict branch forbids zero scales outright."""
    total = 0.0
    for w_idx in range(Zv.shape[1]):
        w = float(W[w_idx])
        zcol = Zv[:, w_idx]
        znorm = float(np.abs(zcol).max())
        if w <= 0.0:
            if strict:
                return NEG_INF
            if znorm <= tol:
                continue
            return NEG_INF
        v = agg.concave_conjugate(zcol / w, tol=tol)
        if v == NEG_INF:
            return NEG_INF
        total += probs[w_idx] * w * v
    return total


def _dual_cone_intervals(agg: AggregationSpec, Zv: np.ndarray, tol: float,
                         strict: bool) -> Optional[list[tuple[float, float]]]:
    """Per-scenario scale intervals for positively homogeneous aggregations;
    None when some scenario admits no valid scale."""
    out = []
    for w_idx in range(Zv.shape[1]):
        zcol = Zv[:, w_idx]
        iv = agg.dual_cone_interval(zcol, tol=tol)
        if iv is None:
            return None
        lo, hi = iv
        if lo == 0.0 and hi == 0.0:
            if strict:
                # a strictly positive scale must keep the conjugate finite at 0
                if agg.concave_conjugate(np.zeros(agg.d), tol=tol) == NEG_INF:
                    return None
                out.append((1e-12, math.inf))
            else:
                out.append((0.0, 0.0))
        else:
            out.append((max(lo, 1e-12) if strict else lo, hi))
    return out


def _feasible_w_in_cone(acc: AcceptanceSpec, intervals: list[tuple[float, float]]
                        ) -> Optional[np.ndarray]:
    """A barrier-cone element with per-scenario scales inside the intervals."""
    p = acc.space.probs
    n = p.size
    lo = np.array([iv[0] for iv in intervals])
    hi = np.array([min(iv[1], _HUGE) for iv in intervals])
    if np.any(lo > hi):
        return None
    if acc.kind == "nonnegative":
        return lo
    if acc.kind == "expectation_floor":
        # cone of constants (only meaningful when the floor is 0)
        a, b = float(lo.max()), float(hi.min())
        if a > b:
            return None
        lam = a if a > 0 else min(b, 1.0)
        return np.full(n, lam)
    if acc.kind == "expected_shortfall":
        lam = acc.level
        # a total mass s works iff max(lam*max(lo), E[lo]) <= s <= E[min(hi, s/lam)];
        # the slack s -> E[min(hi, s/lam)] - s is concave, so maximize it
        s_min = max(lam * float(lo.max()), float(p @ lo), 1e-12)
        s_hi = float(p @ hi) + s_min + 1.0

        def slack(s: float) -> float:
            return float(p @ np.minimum(hi, s / lam)) - s

        s_star, best = golden_max(slack, s_min, s_hi, tol=1e-12)
        for s_c in (s_min, s_hi):
            if slack(s_c) > best:
                s_star, best = s_c, slack(s_c)
        if best < -1e-9 * (1.0 + s_star):
            return None
        cap = np.minimum(hi, s_star / lam)
        W = lo.copy()
        deficit = min(s_star, float(p @ cap)) - float(p @ W)
        for w_idx in range(n):
            room = (cap[w_idx] - W[w_idx]) * p[w_idx]
            take = min(room, max(deficit, 0.0))
            W[w_idx] += take / p[w_idx]
            deficit -= take
            if deficit <= 1e-15:
                break
        return W
    # polyhedral cone: coefficients c >= 0 with lo <= (sum_j c_j W_j) <= hi
    Wrows = acc.weights
    k = Wrows.shape[0]
    A_ub = np.vstack([Wrows.T, -Wrows.T])
    b_ub = np.concatenate([hi, -lo])
    res = solve_lp(np.zeros(k), A_ub=A_ub, b_ub=b_ub)
    if res.status != "optimal":
        return None
    return Wrows.T @ res.x


def _scalar_candidates(Zv: np.ndarray) -> list[float]:
    vals = []
    flat = np.abs(Zv)
    if flat.max() > 0:
        vals += [float(flat.max()), float(flat.mean()), float(Zv.mean())]
        vals += [float(x) for x in Zv.max(axis=0)]
        vals += [float(x) for x in np.abs(Zv).sum(axis=0)]
    vals.append(1.0)
    return sorted({v for v in vals if v > 0.0})


def alpha(Z: DualVector, agg: AggregationSpec, acc: AcceptanceSpec,
          space: ScenarioSpace, strict_positive: bool = False,
          tol: float = 1e-8) -> PenaltyEval:
    """Penalty of the systemic acceptance set at a dual direction: supremum
    over the barrier cone of the support value plus the scenario-wise
    perspective of the aggregation conjugate. Nonnegative dual directions
    only; the strict branch restricts to strictly positive cone elements."""
    if tol <= 0:
        raise ValidationError("tolerance must be positive")
    Zv = Z.values
    n = space.n
    scale = float(np.abs(Zv).max())
    if np.any(Zv < -tol * (1.0 + scale)):
        return PenaltyEval(NEG_INF, None, strict_positive)
    if scale <= 1e-14:
        return PenaltyEval(0.0, RandomVariable(np.zeros(n)), strict_positive)

    # exact conic route: with a positively homogeneous aggregation and a conic
    # acceptance set the penalty is an indicator
    if agg.positively_homogeneous and acc.is_cone():
        intervals = _dual_cone_intervals(agg, Zv, tol, strict_positive)
        if intervals is None:
            return PenaltyEval(NEG_INF, None, strict_positive)
        W = _feasible_w_in_cone(acc, intervals)
        if W is None:
            return PenaltyEval(NEG_INF, None, strict_positive)
        return PenaltyEval(0.0, RandomVariable(W), strict_positive)

    p = space.probs

    def objective(W: np.ndarray) -> float:
        sig = acc.support_function(RandomVariable(W), tol=tol)
        if sig == NEG_INF:
            return NEG_INF
        terms = _phi_terms(agg, Zv, p, W, tol, strict_positive)
        if terms == NEG_INF:
            return NEG_INF
        return sig + terms

    best_val, best_W = NEG_INF, None

    def consider(W: np.ndarray):
        nonlocal best_val, best_W
        v = objective(W)
        if v > best_val:
            best_val, best_W = v, W.copy()

    if acc.kind == "expectation_floor":
        f = lambda lam: objective(np.full(n, lam))
        lo, hi = 1e-8 * max(scale, 1e-8), 1e8 * max(scale, 1e-8)
        lam, val = scan_then_golden_max(f, lo, hi, count=49, tol=1e-12)
        if val > best_val:
            best_val, best_W = val, np.full(n, lam)
        for c in _scalar_candidates(Zv):
            consider(np.full(n, c))
    elif acc.kind == "nonnegative":
        # separable: each scenario picks its own scale
        W = np.zeros(n)
        total = 0.0
        for w_idx in range(n):
            zcol = Zv[:, w_idx]
            znorm = float(np.abs(zcol).max())
            if znorm <= tol and not strict_positive:
                W[w_idx] = 0.0
                continue
            sref = max(znorm, 1e-8 * max(scale, 1e-8))

            def one(w, w_idx=w_idx):
                return _phi_terms(agg, Zv[:, [w_idx]], np.ones(1), np.array([w]),
                                  tol, strict_positive)

            cands = [float(zcol.mean()), float(zcol.max()), float(np.abs(zcol).sum())]
            w_best, v_best = scan_then_golden_max(one, 1e-8 * sref, 1e8 * sref,
                                                  count=49, tol=1e-12)
            for c in cands:
                if c > 0.0:
                    v = one(c)
                    if v > v_best:
                        w_best, v_best = c, v
            if v_best == NEG_INF:
                return PenaltyEval(NEG_INF, None, strict_positive)
            W[w_idx] = w_best
            total += p[w_idx] * v_best
        best_val, best_W = total, W
    elif acc.kind == "expected_shortfall":
        starts = _cone_ascent_starts(acc, Zv, scale)
        for W0 in starts:
            W, val = _coordinate_ascent_cone(objective, acc, W0, scale, sweeps=4)
            if val > best_val:
                best_val, best_W = val, W
    else:
        # polyhedral: search in generator coefficients; the supremum over all
        # coefficient vectors absorbs the choice of cone representation
        Wrows = acc.weights

        def coef_objective(coefs: np.ndarray) -> float:
            W = Wrows.T @ coefs
            terms = _phi_terms(agg, Zv, p, W, tol, strict_positive)
            if terms == NEG_INF:
                return NEG_INF
            return float(acc.floors @ coefs) + terms

        k = Wrows.shape[0]
        row_scale = np.array([max(r.max(), 1e-12) for r in Wrows])
        starts = [np.zeros(k), max(scale, 1e-8) / row_scale]
        for j in range(k):
            seed = np.zeros(k)
            seed[j] = max(scale, 1e-8) / row_scale[j]
            starts.append(seed)
        for c0 in starts:
            cvec, val = _coef_ascent(coef_objective, c0, max(scale, 1e-8) / row_scale)
            if val > best_val:
                best_val, best_W = val, Wrows.T @ cvec

    if best_val == NEG_INF:
        return PenaltyEval(NEG_INF, None, strict_positive)
    w_star = RandomVariable(best_W) if best_W is not None else None
    return PenaltyEval(min(best_val, 0.0), w_star, strict_positive)


def _coef_ascent(objective, c0: np.ndarray, coord_scale: np.ndarray,
                 sweeps: int = 4) -> tuple[np.ndarray, float]:
    """Nonnegative coordinate ascent with geometric scans per coordinate."""
    c = c0.astype(float).copy()
    best = objective(c)
    for _ in range(sweeps):
        improved = 0.0
        for j in range(c.size):
            def line(t, j=j):
                cc = c.copy()
                cc[j] = t
                return objective(cc)

            ref = max(float(c[j]), float(coord_scale[j]))
            t_new, v_new = scan_then_golden_max(line, 1e-8 * ref, 1e6 * ref,
                                                count=33, tol=1e-11)
            v_zero = line(0.0)
            if v_zero > v_new:
                t_new, v_new = 0.0, v_zero
            if v_new > best + 1e-15:
                improved += v_new - best
                best = v_new
                c[j] = t_new
        if improved <= 1e-12 * (1.0 + abs(best)):
            break
    return c, best


def _cone_ascent_starts(acc: AcceptanceSpec, Zv: np.ndarray, scale: float
                        ) -> list[np.ndarray]:
    n = Zv.shape[1]
    starts = []
    for s in _scalar_candidates(Zv)[:4]:
        starts.append(np.full(n, s))
    starts.append(np.maximum(Zv.max(axis=0), 1e-8 * max(scale, 1e-8)))
    return starts


def _coordinate_ascent_cone(objective, acc: AcceptanceSpec, W0: np.ndarray,
                            scale: float, sweeps: int = 4) -> tuple[np.ndarray, float]:
    """Coordinate golden-section ascent, staying inside the barrier cone by
    construction of the per-coordinate intervals."""
    n = W0.size
    p = acc.space.probs
    W = W0.astype(float).copy()
    best = objective(W)
    if best == NEG_INF:
        # try a crude scale sweep before giving up
        for s in np.geomspace(1e-6, 1e6, 25):
            v = objective(W0 * s)
            if v > best:
                best = v
                W = W0 * s
        if best == NEG_INF:
            return W, NEG_INF
    for _ in range(sweeps):
        improved = 0.0
        for w_idx in range(n):
            lo, hi = 0.0, 1e8 * max(scale, 1.0)
            if acc.kind == "expected_shortfall":
                lam = acc.level
                e_other = float(p @ W) - p[w_idx] * W[w_idx]
                others = np.delete(W, w_idx)
                if others.size:
                    lo = max(0.0, float((lam * others.max() - e_other) / p[w_idx]))
                if lam > p[w_idx]:
                    hi = max(lo, e_other / (lam - p[w_idx]))

            def line(w, w_idx=w_idx):
                WW = W.copy()
                WW[w_idx] = w
                return objective(WW)

            if hi <= lo + 1e-15:
                continue
            w_new, v_new = golden_max(line, lo, hi, tol=1e-11)
            if v_new > best + 1e-15:
                improved += v_new - best
                best = v_new
                W[w_idx] = w_new
        if improved <= 1e-12 * (1.0 + abs(best)):
            break
    return W, best


def alpha_tilde(Z: DualVector, agg: AggregationSpec, acc: AcceptanceSpec,
                space: ScenarioSpace, strict_positive: bool = False,
                tol: float = 1e-8) -> PenaltyEval:
    """Same penalty with the cone direction normalized to unit expectation."""
    if tol <= 0:
        raise ValidationError("tolerance must be positive")
    Zv = Z.values
    n = space.n
    p = space.probs
    scale = float(np.abs(Zv).max())
    if np.any(Zv < -tol * (1.0 + scale)):
        return PenaltyEval(NEG_INF, None, strict_positive)

    def objective(W: np.ndarray) -> float:
        if abs(float(p @ W) - 1.0) > 1e-9:
            return NEG_INF
        sig = acc.support_function(RandomVariable(W), tol=tol)
        if sig == NEG_INF:
            return NEG_INF
        terms = _phi_terms(agg, Zv, p, W, tol, strict_positive)
        if terms == NEG_INF:
            return NEG_INF
        return sig + terms

    if acc.kind == "expectation_floor":
        W = np.ones(n)
        return PenaltyEval(objective(W), RandomVariable(W), strict_positive)

    if agg.positively_homogeneous and acc.is_cone():
        intervals = _dual_cone_intervals(agg, Zv, tol, strict_positive)
        if intervals is None:
            return PenaltyEval(NEG_INF, None, strict_positive)
        lo = np.array([iv[0] for iv in intervals])
        hi = np.array([min(iv[1], _HUGE) for iv in intervals])
        if acc.kind == "expected_shortfall":
            hi = np.minimum(hi, 1.0 / acc.level)
        if acc.kind in ("nonnegative", "expected_shortfall", "expectation_floor"):
            if np.any(lo > hi) or not (float(p @ lo) <= 1.0 + 1e-12
                                       and 1.0 <= float(p @ hi) + 1e-12):
                return PenaltyEval(NEG_INF, None, strict_positive)
            W = lo + (hi - lo) * 0.0
            deficit = 1.0 - float(p @ W)
            for w_idx in range(n):
                room = (hi[w_idx] - W[w_idx]) * p[w_idx]
                take = min(room, deficit)
                W[w_idx] += take / p[w_idx]
                deficit -= take
                if deficit <= 1e-15:
                    break
            return PenaltyEval(0.0, RandomVariable(W), strict_positive)
        k = acc.weights.shape[0]
        A_ub = np.vstack([acc.weights.T, -acc.weights.T])
        b_ub = np.concatenate([hi, -lo])
        A_eq = (acc.weights @ p)[None, :]
        res = solve_lp(np.zeros(k), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0])
        if res.status != "optimal":
            return PenaltyEval(NEG_INF, None, strict_positive)
        W = acc.weights.T @ res.x
        return PenaltyEval(0.0, RandomVariable(W), strict_positive)

    best_val, best_W = NEG_INF, None
    if acc.kind == "polyhedral":
        # search in generator coefficients on the unit-expectation slice
        Wrows = acc.weights
        ew = Wrows @ p
        live = np.flatnonzero(ew > 0)

        def coef_obj(coefs: np.ndarray) -> float:
            W = Wrows.T @ coefs
            terms = _phi_terms(agg, Zv, p, W, tol, strict_positive)
            if terms == NEG_INF:
                return NEG_INF
            return float(acc.floors @ coefs) + terms

        starts = []
        for j in live:
            seed = np.zeros(Wrows.shape[0])
            seed[j] = 1.0 / ew[j]
            starts.append(seed)
        if live.size:
            uniform = np.zeros(Wrows.shape[0])
            uniform[live] = 1.0 / (ew[live] * live.size)
            starts.append(uniform)
        for c0 in starts:
            cvec, val = _slice_pairwise_ascent(coef_obj, ew, c0, cap=_HUGE)
            if val > best_val:
                best_val = val
                best_W = Wrows.T @ cvec
    else:
        # pairwise mass exchanges on scenario weights keep unit expectation
        starts = [np.ones(n)]
        for w_idx in range(n):
            spike = np.zeros(n)
            spike[w_idx] = 1.0 / p[w_idx]
            starts.append(spike)
        colmax = Zv.max(axis=0)
        if colmax.max() > 0:
            starts.append(colmax / float(p @ colmax))
        cap = 1.0 / acc.level if acc.kind == "expected_shortfall" else _HUGE
        for W0 in starts:
            if acc.kind == "expected_shortfall":
                W0 = np.minimum(W0, cap)
                mass = float(p @ W0)
                if mass <= 0:
                    continue
                W0 = W0 / mass
                if W0.max() > cap + 1e-12:
                    continue
            W, val = _slice_pairwise_ascent(objective, p, W0, cap=cap)
            if val > best_val:
                best_val, best_W = val, W
    if best_val == NEG_INF:
        return PenaltyEval(NEG_INF, None, strict_positive)
    return PenaltyEval(best_val, RandomVariable(best_W), strict_positive)


def _slice_pairwise_ascent(objective, p: np.ndarray, W0: np.ndarray,
                           cap: float, sweeps: int = 4) -> tuple[np.ndarray, float]:
    n = W0.size
    W = W0.astype(float).copy()
    best = objective(W)
    if best == NEG_INF:
        return W, NEG_INF
    for _ in range(sweeps):
        improved = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                if p[i] <= 0.0 or p[j] <= 0.0:
                    continue
                t_lo = max(-W[i] * p[i], (W[j] - cap) * p[j])
                t_hi = min((cap - W[i]) * p[i], W[j] * p[j])
                if t_hi <= t_lo + 1e-15:
                    continue

                def line(t, i=i, j=j):
                    WW = W.copy()
                    WW[i] += t / p[i]
                    WW[j] -= t / p[j]
                    return objective(WW)

                t_new, v_new = golden_max(line, t_lo, t_hi, tol=1e-11)
                if v_new > best + 1e-15:
                    improved += v_new - best
                    best = v_new
                    W[i] += t_new / p[i]
                    W[j] -= t_new / p[j]
        if improved <= 1e-12 * (1.0 + abs(best)):
            break
    return W, best


# ---------------------------------------------------------------------------
# multiplier-side dual engine


def _inner_capital_min(agg: AggregationSpec, Xv: np.ndarray, pi: np.ndarray
                       ) -> tuple[float, Optional[np.ndarray]]:
    """inf over injections m of sum(m) - sum_w pi_w Lambda(X_w + m)."""
    d = agg.d
    mass = float(pi.sum())
    if agg.kind == "sum":
        if abs(mass - 1.0) > 1e-9:
            return NEG_INF, None
        return -float(pi @ Xv.sum(axis=0)), np.zeros(d)
    if agg.kind == "sum_of_losses":
        if mass < 1.0 - 1e-12:
            return NEG_INF, None
        total, m_star = 0.0, np.zeros(d)
        for i in range(d):
            v, m_i = _losses_row_min(Xv[i], pi, mass)
            total += v
            m_star[i] = m_i
        return total, m_star
    if agg.kind == "utility_of_sum":
        Y = Xv.sum(axis=0)
        v, s = _utility_line_min(agg.utility, Y, pi, mass)
        if v == NEG_INF:
            return NEG_INF, None
        return v, np.full(d, s / d)
    if agg.kind == "componentwise_utility":
        total, m_star = 0.0, np.zeros(d)
        for i in range(d):
            v, m_i = _utility_line_min(agg.utilities[i], Xv[i], pi, mass)
            if v == NEG_INF:
                return NEG_INF, None
            total += v
            m_star[i] = m_i
        return total, m_star
    return _inner_min_numeric(agg, Xv, pi)


def _losses_row_min(xrow: np.ndarray, pi: np.ndarray, mass: float
                    ) -> tuple[float, float]:
    # piecewise-linear in the injection; kinks where a scenario stops losing
    kinks = -xrow
    order = np.argsort(kinks, kind="stable")
    ks = kinks[order]
    cum = np.cumsum(pi[order])
    m_star = ks[-1]
    for k in range(ks.size):
        if 1.0 - (mass - cum[k]) >= -1e-15:
            m_star = ks[k]
            break
    val = m_star - float(pi @ np.minimum(xrow + m_star, 0.0))
    return val, float(m_star)


def _utility_line_min(u, xrow: np.ndarray, pi: np.ndarray, mass: float
                      ) -> tuple[float, float]:
    if mass <= 0.0:
        return NEG_INF, 0.0
    s_neg, s_pos = u.slope_at_neg_inf(), u.slope_at_pos_inf()
    if not math.isinf(s_neg) and mass * s_neg < 1.0 - 1e-9:
        return NEG_INF, 0.0
    if mass * s_pos > 1.0 + 1e-9:
        return NEG_INF, 0.0
    if u.kind == "exponential":
        g = u.gamma
        m = math.log(float(pi @ (g * np.exp(-g * xrow)))) / g
    else:
        def deriv_gap(m):
            return float(pi @ u.deriv(xrow + m)) - 1.0
        span = 1.0 + float(np.abs(xrow).max())
        lo, hi = -span, span
        while deriv_gap(lo) < 0.0 and lo > -1e10:
            lo *= 4.0
        while deriv_gap(hi) > 0.0 and hi < 1e10:
            hi *= 4.0
        m = bisect_threshold(lambda mm: deriv_gap(mm) <= 0.0, lo, hi, tol=1e-13)
    val = m - float(pi @ u(xrow + m))
    return val, float(m)


def _inner_min_numeric(agg: AggregationSpec, Xv: np.ndarray, pi: np.ndarray
                       ) -> tuple[float, Optional[np.ndarray]]:
    from .optim import expand_bracket_min, golden_min
    d = agg.d

    def psi(m: np.ndarray) -> float:
        return float(m.sum()) - float(pi @ agg._eval_matrix(Xv + m[:, None]))

    m = np.zeros(d)
    best = psi(m)
    for _ in range(80):
        moved = 0.0
        for i in range(d):
            def line(t, i=i):
                mm = m.copy()
                mm[i] = t
                return psi(mm)
            br = expand_bracket_min(line, x0=float(m[i]), step=1.0 + abs(float(m[i])))
            if br is None:
                return NEG_INF, None
            t, v = golden_min(line, br[0], br[1], tol=1e-11)
            if v < best - 1e-14:
                moved += best - v
                best, m[i] = v, t
        if best < -UNBOUNDED_CAP:
            return NEG_INF, None
        if moved <= 1e-12 * (1.0 + abs(best)):
            break
    return best, m


def _mass_bounds(agg: AggregationSpec) -> tuple[float, float]:
    """Bounds on the total multiplier mass keeping the inner problem bounded."""
    if agg.kind == "sum":
        return 1.0, 1.0
    if agg.kind == "sum_of_losses":
        return 1.0, math.inf
    def bounds_for(u):
        s_neg, s_pos = u.slope_at_neg_inf(), u.slope_at_pos_inf()
        lo = 0.0 if math.isinf(s_neg) else 1.0 / s_neg
        hi = math.inf if s_pos == 0.0 else 1.0 / s_pos
        return lo, hi
    if agg.kind == "utility_of_sum":
        return bounds_for(agg.utility)
    if agg.kind == "componentwise_utility":
        los, his = zip(*(bounds_for(u) for u in agg.utilities))
        return max(los), min(his)
    return 0.0, math.inf


@dataclass
class _ThetaParam:
    """Affine parameterization of barrier-cone multipliers pi = J theta."""
    k: int
    J: np.ndarray                 # n x k, pi = J @ theta
    lin: np.ndarray               # support-function part, linear in theta
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: Optional[np.ndarray]
    b_eq: Optional[np.ndarray]


def _theta_param(agg: AggregationSpec, acc: AcceptanceSpec) -> _ThetaParam:
    p = acc.space.probs
    n = p.size
    if acc.kind == "expectation_floor":
        J = p[:, None].copy()
        lin = np.array([acc.u0])
    elif acc.kind in ("nonnegative", "expected_shortfall"):
        J = np.eye(n)
        lin = np.zeros(n)
    else:
        J = (p[:, None] * acc.weights.T).copy()
        lin = acc.floors.copy()
    k = J.shape[1]
    rows, rhs = [], []
    if acc.kind == "expected_shortfall":
        lam = acc.level
        for w_idx in range(n):
            r = -np.ones(n) / lam
            r[w_idx] += 1.0 / p[w_idx]
            rows.append(r @ J)
            rhs.append(0.0)
    mass_vec = J.sum(axis=0)
    lo, hi = _mass_bounds(agg)
    A_eq = b_eq = None
    if lo == hi:
        A_eq = mass_vec[None, :]
        b_eq = np.array([lo])
    else:
        if lo > 0.0:
            rows.append(-mass_vec)
            rhs.append(-lo)
        if math.isfinite(hi):
            rows.append(mass_vec)
            rhs.append(hi)
    A_ub = np.array(rows) if rows else np.zeros((0, k))
    b_ub = np.array(rhs) if rhs else np.zeros(0)
    return _ThetaParam(k, J, lin, A_ub, b_ub, A_eq, b_eq)


def _dual_candidates(agg: AggregationSpec, acc: AcceptanceSpec, Xv: np.ndarray,
                     probs: np.ndarray, m_star: Optional[np.ndarray],
                     param: _ThetaParam) -> list[np.ndarray]:
    """Multiplier seeds built from the primal solution's first-order structure."""
    n = probs.size
    cands: list[np.ndarray] = []
    lo, hi = _mass_bounds(agg)
    mass_mid = lo if lo == hi else max(lo, min(1.0, hi if math.isfinite(hi) else 1.0))
    if mass_mid <= 0.0:
        mass_mid = 1.0

    if acc.kind == "expectation_floor":
        cands.append(np.array([mass_mid]))
    elif acc.kind in ("nonnegative", "expected_shortfall"):
        cands.append(mass_mid * probs)
    else:
        ew = acc.weights @ probs
        for j in np.flatnonzero(ew > 0):
            seed = np.zeros(param.k)
            seed[j] = mass_mid / ew[j]
            cands.append(seed)

    if m_star is None:
        return cands
    M = Xv + m_star[:, None]
    G = np.column_stack([agg.supergradient(M[:, w]) for w in range(n)])  # d x n
    U = agg._eval_matrix(M)
    d = agg.d

    if acc.kind == "expectation_floor":
        denom = float((G @ probs).mean())
        if denom > 1e-12:
            cands.insert(0, np.array([1.0 / denom]))
    elif acc.kind == "nonnegative":
        scale = 1.0 + float(np.abs(U).max())
        active = [w for w in range(n) if U[w] <= 1e-6 * scale]
        for size in range(1, min(d, len(active)) + 1):
            for S in itertools.islice(itertools.combinations(active, size), 40):
                A = G[:, list(S)]
                sol, *_ = np.linalg.lstsq(A, np.ones(d), rcond=None)
                if np.all(sol >= -1e-9) and np.linalg.norm(A @ sol - 1.0) <= 1e-6:
                    seed = np.zeros(n)
                    seed[list(S)] = np.maximum(sol, 0.0)
                    cands.insert(0, seed)
    elif acc.kind == "expected_shortfall":
        q = es_tail_weights(U, probs, acc.level)
        denom = float((G @ q).mean())
        if denom > 1e-12:
            cands.insert(0, q / denom)
    else:
        gvals = acc.floors - acc.weights @ (probs * U)
        scale = 1.0 + float(np.abs(U).max())
        active = [j for j in range(acc.floors.size) if gvals[j] >= -1e-6 * scale]
        cols = {j: G @ (probs * acc.weights[j]) for j in active}
        for size in range(1, min(d, len(active)) + 1):
            for S in itertools.islice(itertools.combinations(active, size), 40):
                A = np.column_stack([cols[j] for j in S])
                sol, *_ = np.linalg.lstsq(A, np.ones(d), rcond=None)
                if np.all(sol >= -1e-9) and np.linalg.norm(A @ sol - 1.0) <= 1e-6:
                    seed = np.zeros(param.k)
                    seed[list(S)] = np.maximum(sol, 0.0)
                    cands.insert(0, seed)
    return cands


def _maximize_multiplier_dual(agg: AggregationSpec, acc: AcceptanceSpec,
                              Xv: np.ndarray, space: ScenarioSpace,
                              m_star: Optional[np.ndarray], tol: float,
                              max_iter: int = 120
                              ) -> tuple[float, Optional[np.ndarray],
                                         Optional[np.ndarray], bool]:
    """Maximize h(theta) = lin @ theta + inf_m [sum m - sum pi_w Lambda(X_w+m)]
    by cutting planes in the multiplier parameterization. Every evaluation is a
    certified lower bound for the primal value. Returns (value, pi, m_inner,
    converged)."""
    param = _theta_param(agg, acc)
    probs = space.probs

    def h(theta: np.ndarray) -> tuple[float, Optional[np.ndarray]]:
        pi = param.J @ theta
        if np.any(pi < -1e-12):
            return NEG_INF, None
        val, m_in = _inner_capital_min(agg, Xv, np.maximum(pi, 0.0))
        if val == NEG_INF:
            return NEG_INF, None
        return float(param.lin @ theta) + val, m_in

    thetas = _dual_candidates(agg, acc, Xv, probs, m_star, param)
    cuts_g: list[np.ndarray] = []
    cuts_r: list[float] = []
    best_val, best_theta, best_m = NEG_INF, None, None

    def add_cut(theta: np.ndarray) -> float:
        nonlocal best_val, best_theta, best_m
        val, m_in = h(theta)
        if val == NEG_INF:
            return NEG_INF
        E = agg._eval_matrix(Xv + m_in[:, None]) if m_in is not None else np.zeros(probs.size)
        grad = param.lin + param.J.T @ (-(E))
        cuts_g.append(grad)
        cuts_r.append(val - float(grad @ theta))
        if val > best_val:
            best_val, best_theta, best_m = val, theta.copy(), m_in
        return val

    for th in thetas:
        add_cut(np.asarray(th, dtype=float))

    box = 1e7
    converged = False
    for _ in range(max_iter):
        if not cuts_g:
            break
        k = param.k
        nv = k + 2  # theta, t+, t-
        c = np.zeros(nv)
        c[k], c[k + 1] = -1.0, 1.0
        rows = []
        rhs = []
        for gvec, r in zip(cuts_g, cuts_r):
            row = np.zeros(nv)
            row[:k] = -gvec
            row[k], row[k + 1] = 1.0, -1.0
            rows.append(row)
            rhs.append(r)
        for arow, brhs in zip(param.A_ub, param.b_ub):
            row = np.zeros(nv)
            row[:k] = arow
            rows.append(row)
            rhs.append(brhs)
        for i in range(k):
            row = np.zeros(nv)
            row[i] = 1.0
            rows.append(row)
            rhs.append(box)
        A_eq = b_eq = None
        if param.A_eq is not None:
            A_eq = np.zeros((param.A_eq.shape[0], nv))
            A_eq[:, :k] = param.A_eq
            b_eq = param.b_eq
        res = solve_lp(c, A_ub=np.array(rows), b_ub=np.array(rhs),
                       A_eq=A_eq, b_eq=b_eq)
        if res.status == "unbounded":
            box *= 8.0
            continue
        if res.status != "optimal":
            break
        theta_k = res.x[:param.k]
        ub = res.x[param.k] - res.x[param.k + 1]
        if best_val > NEG_INF and ub - best_val <= tol * max(1.0, abs(best_val)):
            converged = True
            break
        val = add_cut(theta_k)
        if val == NEG_INF:
            # walk back toward the incumbent until the inner problem is bounded
            if best_theta is None:
                break
            ok = False
            mid = theta_k
            for _ in range(8):
                mid = 0.5 * (mid + best_theta)
                if add_cut(mid) > NEG_INF:
                    ok = True
                    break
            if not ok:
                break
        if np.any(theta_k >= box * (1.0 - 1e-9)):
            box *= 8.0
    pi_best = param.J @ best_theta if best_theta is not None else None
    return best_val, pi_best, best_m, converged


def _construct_dual_pair(agg: AggregationSpec, Xv: np.ndarray, pi: np.ndarray,
                         m_in: Optional[np.ndarray], probs: np.ndarray
                         ) -> tuple[RandomVariable, DualVector]:
    W = pi / probs
    m = m_in if m_in is not None else np.zeros(agg.d)
    M = Xv + m[:, None]
    Zv = np.column_stack([W[w] * agg.supergradient(M[:, w]) for w in range(probs.size)])
    return RandomVariable(W), DualVector(Zv)


def dual_rho(X: RandomVector, agg: AggregationSpec, acc: AcceptanceSpec,
             space: ScenarioSpace, tol: float = 1e-6,
             primal: Optional[PrimalResult] = None,
             fw_iters: int = 8) -> DualityReport:
    """Dual value, optimizers and gap for the allocate-then-aggregate measure."""
    if primal is None:
        primal = rho(X, agg, acc, space, tol=tol)
    if primal.value == NEG_INF:
        return DualityReport.build(primal, NEG_INF, None, None, "rho",
                                   degenerate=True, converged=False)
    if primal.value == POS_INF:
        return DualityReport.build(primal, NEG_INF, None, None, "rho",
                                   degenerate=True, converged=False)
    Xv = X.values
    dual_val, pi, m_in, converged = _maximize_multiplier_dual(
        agg, acc, Xv, space, primal.m_star, tol=min(tol, 1e-7))
    Z_star = W_star = None
    if pi is not None:
        W_star, Z_star = _construct_dual_pair(agg, Xv, pi, m_in, space.probs)

    gap = abs(primal.value - dual_val) if math.isfinite(dual_val) else POS_INF
    if gap > tol * max(1.0, abs(primal.value)) and fw_iters > 0 and Z_star is not None:
        fw_val, fw_Z = _frank_wolfe_sigma(X, Z_star, agg, acc, space,
                                          iters=fw_iters, tol=tol)
        if fw_val > dual_val:
            dual_val, Z_star = fw_val, fw_Z
            converged = abs(primal.value - dual_val) <= tol * max(1.0, abs(primal.value))
    return DualityReport.build(primal, dual_val, Z_star, W_star, "rho",
                               converged=converged)


def _frank_wolfe_sigma(X: RandomVector, Z0: DualVector, agg: AggregationSpec,
                       acc: AcceptanceSpec, space: ScenarioSpace,
                       iters: int, tol: float) -> tuple[float, DualVector]:
    """Ascent of sigma(Z) - <X, Z> over the product of scenario simplices,
    using the support solve both as value oracle and gradient oracle."""
    p = space.probs
    Zv = np.maximum(Z0.values.copy(), 0.0)
    means = Zv @ p
    for i in range(Zv.shape[0]):
        Zv[i] = Zv[i] / means[i] if means[i] > 1e-12 else 1.0
    best_val, best_Z = NEG_INF, DualVector(Zv)
    for t in range(iters):
        Z = DualVector(Zv)
        sres = _support_systemic_full(Z, agg, acc, space, tol=tol, max_iter=200)
        if sres.status == "unbounded" or sres.X_star is None:
            break
        val = sres.lower_bound - pairing(X, Z, space)
        if val > best_val:
            best_val, best_Z = val, Z
        D = sres.X_star.reshape(Zv.shape) - X.values
        V = np.zeros_like(Zv)
        for i in range(Zv.shape[0]):
            w = int(np.argmax(D[i]))
            V[i, w] = 1.0 / p[w]
        gamma = 2.0 / (t + 2.0)
        Zv = (1.0 - gamma) * Zv + gamma * V
    return best_val, best_Z


def dual_rho_tilde(X: RandomVector, agg: AggregationSpec, acc: AcceptanceSpec,
                   space: ScenarioSpace, tol: float = 1e-9,
                   primal: Optional[PrimalResult] = None) -> DualityReport:
    """Dual value for the aggregate-then-allocate measure: the slice dual of
    the acceptance set's cash risk at the aggregated outcome, with the dual
    direction expanded through the aggregation's supergradients."""
    if primal is None:
        primal = rho_tilde(X, agg, acc, space, tol=tol)
    if not math.isfinite(primal.value):
        return DualityReport.build(primal, NEG_INF, None, None, "rho_tilde",
                                   degenerate=True, converged=False)
    p = space.probs
    U = agg.eval_vector(X).values
    n = space.n
    if acc.kind == "nonnegative":
        w_idx = int(np.argmin(U))
        W = np.zeros(n)
        W[w_idx] = 1.0 / p[w_idx]
        dual_val = -float(U[w_idx])
    elif acc.kind == "expectation_floor":
        W = np.ones(n)
        dual_val = acc.u0 - float(p @ U)
    elif acc.kind == "expected_shortfall":
        q = es_tail_weights(U, p, acc.level)
        W = q / p
        dual_val = -float(q @ U)
    else:
        ew = acc.weights @ p
        best_j, dual_val = None, NEG_INF
        for j in np.flatnonzero(ew > 0):
            v = (acc.floors[j] - float(acc.weights[j] @ (p * U))) / ew[j]
            if v > dual_val:
                best_j, dual_val = j, v
        W = acc.weights[best_j] / ew[best_j]
    Zv = np.column_stack([W[w] * agg.supergradient(X.values[:, w]) for w in range(n)])
    Z_star = DualVector(Zv)
    # honest cross-evaluation through the slice penalty; keep the better bound
    pen = alpha_tilde(Z_star, agg, acc, space, tol=1e-8)
    if pen.value > NEG_INF:
        alt = pen.value - pairing(X, Z_star, space)
        dual_val = max(dual_val, alt)
    gap_ok = abs(primal.value - dual_val) <= max(tol * 10.0, 1e-9) * max(1.0, abs(primal.value))
    return DualityReport.build(primal, dual_val, Z_star, RandomVariable(W),
                               "rho_tilde", converged=gap_ok)


# ---------------------------------------------------------------------------
# saddle-value check and the conic membership set


@dataclass
class MinimaxReport:
    inf_sup: float
    sup_inf: float
    discrepancy: float
    x_points: int
    w_points: int


def minimax_check(Z: DualVector, agg: AggregationSpec, acc: AcceptanceSpec,
                  space: ScenarioSpace, grid: int = 9,
                  radius: float = 6.0) -> MinimaxReport:
    """Both iterated optimizations of the pairing Lagrangian on dense grids.

    Small instances only (d*n <= 6): the position grid is a full product
    grid. The cone grid is augmented with structure-derived directions so
    that thin feasibility sets are represented."""
    d, n = agg.d, space.n
    if d * n > 6:
        raise ValidationError("minimax grid check is limited to d*n <= 6")
    p = space.probs
    Zv = Z.values
    axes = [np.linspace(-radius, radius, grid)] * (d * n)
    Xpts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d * n)

    Wgrid = _w_grid(acc, Zv, grid)
    sigma = np.array([acc.support_function(RandomVariable(w)) for w in Wgrid])
    keep = sigma > NEG_INF
    Wgrid, sigma = Wgrid[keep], sigma[keep]

    pair = np.empty(Xpts.shape[0])
    lam = np.empty((Xpts.shape[0], n))
    for idx in range(Xpts.shape[0]):
        M = Xpts[idx].reshape(d, n)
        pair[idx] = float(np.sum(p[None, :] * M * Zv))
        lam[idx] = agg._eval_matrix(M)
    B = lam * p[None, :]
    KT = B @ Wgrid.T  # X-points x W-points
    K = pair[:, None] + sigma[None, :] - KT
    inf_sup = float(K.max(axis=1).min())
    sup_inf = float(K.min(axis=0).max())
    return MinimaxReport(inf_sup, sup_inf, inf_sup - sup_inf,
                         Xpts.shape[0], Wgrid.shape[0])


def _w_grid(acc: AcceptanceSpec, Zv: np.ndarray, grid: int) -> np.ndarray:
    n = Zv.shape[1]
    scale = max(1.0, float(np.abs(Zv).max()))
    if acc.kind == "expectation_floor":
        lams = np.linspace(0.0, 4.0 * scale, grid * grid)
        W = np.repeat(lams[:, None], n, axis=1)
    elif acc.kind == "polyhedral":
        k = acc.weights.shape[0]
        axes = [np.linspace(0.0, 4.0 * scale, grid)] * k
        coefs = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
        W = coefs @ acc.weights
    else:
        axes = [np.linspace(0.0, 4.0 * scale, grid)] * n
        W = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    extras = [Zv.max(axis=0), Zv.mean(axis=0), np.full(n, Zv.max()),
              np.full(n, max(Zv.mean(), 0.0)), np.abs(Zv).sum(axis=0)]
    extras = [e for e in extras if np.all(e >= 0.0)]
    scales = np.array([0.5, 1.0, 2.0])
    extra_rows = np.vstack([s * e for e in extras for s in scales])
    return np.vstack([W, extra_rows])


def conic_membership_D(Z: DualVector, agg: AggregationSpec, acc: AcceptanceSpec,
                       space: ScenarioSpace, tol: float = 1e-9) -> bool:
    """Membership in the dual cone of configurations dominating the impact
    pairing: scenario-decomposed through per-scenario scale intervals plus a
    barrier-cone feasibility program."""
    if not (agg.positively_homogeneous and acc.is_cone()):
        raise ValidationError("conic membership requires homogeneous aggregation and conic acceptance")
    Zv = Z.values
    scale = float(np.abs(Zv).max())
    if scale <= 1e-14:
        return True
    if np.any(Zv < -tol * (1.0 + scale)):
        return False
    intervals = _dual_cone_intervals(agg, Zv, tol, strict=False)
    if intervals is None:
        return False
    return _feasible_w_in_cone(acc, intervals) is not None
