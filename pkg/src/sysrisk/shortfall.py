"""Utility-based shortfall risk for a single position and its dual form.

The primal is a bisection on the cash amount; the dual maximizes, over
scenario reweightings and a positive multiplier, the expected-utility
conjugate objective. Every evaluated dual pair yields a certified lower
bound, so the reported dual value is honest regardless of how the search
terminates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .aggregation import UtilityFn
from .dual import DualityReport
from .errors import ValidationError
from .optim import bisect_threshold, golden_max, log_grid
from .primal import PrimalResult, STATUS_INFEASIBLE, STATUS_OPTIMAL, STATUS_UNBOUNDED
from .scenario import DualVector, RandomVariable, ScenarioSpace

NEG_INF = float("-inf")
POS_INF = float("inf")
UNBOUNDED_CAP = 1e9


@dataclass(frozen=True)
class ShortfallSpec:
    """Utility with a target expected-utility level that is attainable."""

    utility: UtilityFn
    u0: float

    def __post_init__(self):
        probe = [0.0] + [2.0 ** k for k in range(0, 41, 4)]
        if not any(float(self.utility(x)) > self.u0 for x in probe):
            raise ValidationError("no probed point achieves utility above the target level")


def expected_utility(X: RandomVariable, m: float, spec: ShortfallSpec,
                     space: ScenarioSpace) -> float:
    return float(space.probs @ spec.utility(X.values + m))


def rho_u_primal(X: RandomVariable, spec: ShortfallSpec, space: ScenarioSpace,
                 tol: float = 1e-9) -> float:
    """Least cash m with E[u(X + m)] >= u0, by bisection in m."""
    if tol <= 0:
        raise ValidationError("tolerance must be positive")

    def ok(m: float) -> bool:
        return expected_utility(X, m, spec, space) >= spec.u0

    span = 1.0 + float(np.ptp(X.values))
    hi = -float(X.values.min()) + span
    while not ok(hi):
        hi = hi * 2.0 + span
        if hi > UNBOUNDED_CAP:
            return POS_INF
    lo = min(0.0, hi) - span
    while ok(lo):
        lo = lo * 2.0 - span
        if lo < -UNBOUNDED_CAP:
            return NEG_INF
    return bisect_threshold(ok, lo, hi, tol=tol)


def _dual_objective(q: np.ndarray, lam: float, Xv: np.ndarray, p: np.ndarray,
                    spec: ShortfallSpec) -> float:
    if lam <= 0.0:
        return NEG_INF
    total = 0.0
    for w in range(p.size):
        v = spec.utility.conj(lam * q[w] / p[w])
        if v == NEG_INF:
            return NEG_INF
        total += p[w] * v
    return -float(q @ Xv) + (spec.u0 + total) / lam


def _best_lambda(q: np.ndarray, Xv: np.ndarray, p: np.ndarray,
                 spec: ShortfallSpec, lam_hint: float) -> tuple[float, float]:
    """Maximize the dual objective over the multiplier on a log-spaced grid
    around [1e-6, 1e6], then refine; the grid bounds are the documented caps
    for multipliers attained only in the limit."""
    f = lambda lam: _dual_objective(q, lam, Xv, p, spec)
    cands = log_grid(1e-6, 1e6, 49)
    if lam_hint > 0 and math.isfinite(lam_hint):
        cands += [lam_hint * s for s in (0.25, 0.5, 1.0, 2.0, 4.0)]
    best_lam, best_val = None, NEG_INF
    for lam in cands:
        v = f(lam)
        if v > best_val:
            best_lam, best_val = lam, v
    if best_lam is None:
        return 1.0, NEG_INF
    lam, val = golden_max(f, best_lam * 0.25, best_lam * 4.0, tol=1e-12)
    if val > best_val:
        return lam, val
    return best_lam, best_val


def rho_u_dual(X: RandomVariable, spec: ShortfallSpec, space: ScenarioSpace,
               tol: float = 1e-8) -> DualityReport:
    """Dual value and optimizers: supremum over absolutely continuous scenario
    reweightings and positive multipliers of the conjugate objective."""
    primal_value = rho_u_primal(X, spec, space, tol=min(tol, 1e-10))
    primal = PrimalResult(primal_value,
                          np.array([primal_value]) if math.isfinite(primal_value) else None,
                          STATUS_OPTIMAL if math.isfinite(primal_value)
                          else (STATUS_UNBOUNDED if primal_value == NEG_INF
                                else STATUS_INFEASIBLE),
                          iterations=1)
    if not math.isfinite(primal_value):
        return DualityReport.build(primal, NEG_INF, None, None, "shortfall",
                                   degenerate=True, converged=False)
    p = space.probs
    Xv = X.values
    n = p.size

    # first-order candidate: reweight by marginal utility at the primal optimum
    du = np.maximum(np.asarray(spec.utility.deriv(Xv + primal_value), dtype=float), 0.0)
    lam_hint = float(p @ du)
    if lam_hint > 0:
        q0 = p * du / lam_hint
    else:
        q0 = p.copy()
    best_q = q0
    best_lam, best_val = _best_lambda(q0, Xv, p, spec, lam_hint)

    uniform_lam, uniform_val = _best_lambda(p.copy(), Xv, p, spec, lam_hint)
    if uniform_val > best_val:
        best_q, best_lam, best_val = p.copy(), uniform_lam, uniform_val

    # pairwise mass exchanges on the reweighting, multiplier re-optimized
    q = best_q.copy()
    for _ in range(3):
        improved = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                def line(t, i=i, j=j):
                    qq = q.copy()
                    qq[i] += t
                    qq[j] -= t
                    if qq[i] < 0.0 or qq[j] < 0.0:
                        return NEG_INF
                    return _best_lambda(qq, Xv, p, spec, best_lam)[1]

                t_new, v_new = golden_max(line, -float(q[i]), float(q[j]), tol=1e-10)
                if v_new > best_val + 1e-14:
                    improved += v_new - best_val
                    q[i] += t_new
                    q[j] -= t_new
                    best_val = v_new
                    best_q = q.copy()
        if improved <= 1e-12 * (1.0 + abs(best_val)):
            break
    best_lam, lam_val = _best_lambda(best_q, Xv, p, spec, best_lam)
    best_val = max(best_val, lam_val)

    Z_star = DualVector((best_q / p)[None, :])
    W_star = RandomVariable(np.full(n, best_lam))
    return DualityReport.build(primal, best_val, Z_star, W_star, "shortfall",
                               converged=abs(primal_value - best_val)
                               <= max(10.0 * tol, 1e-5 * (1.0 + abs(primal_value))))
