"""Primal solvers for the two systemic risk measures.

``rho`` minimizes the total injected capital over deterministic per
institution injections subject to the aggregated outcome being acceptable.
The acceptance condition is rewritten as a single convex inequality
g(m) <= 0 per acceptance kind and minimized with a Kelley cutting-plane
scheme: the LP relaxation of accumulated cuts gives a certified lower
bound, pushed-to-feasible iterates give upper bounds, and the solve stops
when the gap closes.

``rho_tilde`` adds a single scalar amount to the aggregated outcome and is
computed by bisection through the acceptance set's cash-additive risk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .acceptance import AcceptanceSpec, es_level
from .aggregation import AggregationSpec
from .errors import ValidationError
from .optim import bisect_threshold
from .scenario import RandomVariable, RandomVector, ScenarioSpace
from .simplex import solve_lp

NEG_INF = float("-inf")
POS_INF = float("inf")
UNBOUNDED_CAP = 1e9

STATUS_OPTIMAL = "optimal"
STATUS_UNBOUNDED = "unbounded_below"
STATUS_INFEASIBLE = "infeasible"
STATUS_TOL = "tolerance_reached"


@dataclass
class PrimalResult:
    value: float
    m_star: Optional[np.ndarray]
    status: str
    iterations: int = 0
    lower_bound: float = NEG_INF
    solver_trace: Optional[list] = None


@dataclass
class Diagnostics:
    rho_at_zero: float
    M0_intersection_trivial: bool
    affine_dominance_ok: bool
    interior_point_found: Optional[RandomVector]
    negative_constants_rejected: bool

    @property
    def proper(self) -> bool:
        return self.rho_at_zero > NEG_INF


def es_tail_weights(U: np.ndarray, probs: np.ndarray, level: float) -> np.ndarray:
    """Worst-case scenario reweighting achieving the Expected Shortfall:
    fills probability mass p/level from the lowest outcomes upward."""
    order = np.argsort(U, kind="stable")
    q = np.zeros_like(probs)
    remaining = level
    for k in order:
        take = min(probs[k], remaining)
        q[k] = take / level
        remaining -= take
        if remaining <= 1e-15:
            break
    return q


def constraint_value_and_weights(acc: AcceptanceSpec, U: np.ndarray
                                 ) -> tuple[float, np.ndarray]:
    """Convex inequality g <= 0 equivalent to acceptance of U, together with
    nonnegative scenario weights tau such that -tau is a subgradient of g
    with respect to U."""
    p = acc.space.probs
    if acc.kind == "nonnegative":
        k = int(np.argmin(U))
        tau = np.zeros_like(p)
        tau[k] = 1.0
        return float(-U[k]), tau
    if acc.kind == "expectation_floor":
        return float(acc.u0 - p @ U), p.copy()
    if acc.kind == "expected_shortfall":
        val = es_level(RandomVariable(U), acc.level, acc.space)
        return float(val), es_tail_weights(U, p, acc.level)
    lhs = acc.weights @ (p * U)
    gi = acc.floors - lhs
    i = int(np.argmax(gi))
    return float(gi[i]), p * acc.weights[i]


class _KelleyState:
    """Cutting-plane master: min sum(m) over accumulated cuts inside a box."""

    def __init__(self, d: int, box: float):
        self.d = d
        self.box = box
        self.cut_s: list[np.ndarray] = []
        self.cut_r: list[float] = []

    def add_cut(self, s: np.ndarray, m: np.ndarray, gval: float) -> None:
        # g(m') >= g(m) + <s, m' - m>  =>  feasibility requires <s, m'> <= <s, m> - g(m)
        self.cut_s.append(s.copy())
        self.cut_r.append(float(s @ m - gval))

    def solve(self) -> tuple[Optional[np.ndarray], bool]:
        """Returns (argmin, hit_box)."""
        d, B = self.d, self.box
        n_cuts = len(self.cut_s)
        c = np.ones(d)
        A = np.zeros((n_cuts + d, d))
        b = np.zeros(n_cuts + d)
        for k in range(n_cuts):
            A[k] = self.cut_s[k]
            b[k] = self.cut_r[k] + B * float(self.cut_s[k].sum())
        A[n_cuts:] = np.eye(d)
        b[n_cuts:] = 2.0 * B
        res = solve_lp(c, A_ub=A, b_ub=b)
        if res.status != "optimal":
            return None, True
        m = res.x - B
        hit = bool(np.any(np.abs(m) >= B * (1.0 - 1e-9)))
        return m, hit

    def solve_certified(self) -> tuple[Optional[np.ndarray], bool, bool]:
        """Returns (argmin, lb_valid, maybe_unbounded). A solution touching the
        box only invalidates the bound if enlarging the box improves the value
        (the optimum may sit on an unbounded optimal face)."""
        while True:
            m, hit = self.solve()
            if m is None:
                self.box *= 4.0
                if self.box > 8.0 * UNBOUNDED_CAP:
                    return None, False, True
                continue
            if not hit:
                return m, True, False
            cand = float(m.sum())
            if cand < -UNBOUNDED_CAP:
                return m, False, True
            self.box *= 4.0
            m2, _ = self.solve()
            if m2 is None:
                continue
            cand2 = float(m2.sum())
            if cand2 >= cand - 1e-9 * (1.0 + abs(cand)):
                return m, True, False
            if cand2 < -UNBOUNDED_CAP:
                return m2, False, True
            # value genuinely improved: retry with the enlarged box


def rho(X: RandomVector, agg: AggregationSpec, acc: AcceptanceSpec,
        space: ScenarioSpace, tol: float = 1e-6, max_iter: int = 10000,
        trace: bool = False) -> PrimalResult:
    """Least total capital injection making the aggregated system acceptable."""
    if tol <= 0:
        raise ValidationError("tolerance must be positive")
    if X.d != agg.d or X.n != space.n or acc.n != space.n:
        raise ValidationError("positions, aggregation and acceptance disagree on dimensions")
    d = agg.d
    Xv = X.values

    def gval(m: np.ndarray) -> float:
        U = agg._eval_matrix(Xv + m[:, None])
        return constraint_value_and_weights(acc, U)[0]

    def gval_and_sub(m: np.ndarray) -> tuple[float, np.ndarray]:
        U = agg._eval_matrix(Xv + m[:, None])
        g, tau = constraint_value_and_weights(acc, U)
        s = np.zeros(d)
        for w in np.flatnonzero(tau > 0.0):
            s -= tau[w] * agg.supergradient(Xv[:, w] + m)
        return g, s

    def push_to_feasible(m: np.ndarray) -> Optional[tuple[np.ndarray, float]]:
        """Smallest t >= 0 with m + (t/d) * ones feasible; None if infeasible."""
        if gval(m) <= 0.0:
            return m, float(m.sum())
        step = 1.0
        t = step
        while gval(m + (t / d) * np.ones(d)) > 0.0:
            t *= 2.0
            if t > 4.0 * UNBOUNDED_CAP:
                return None
        tstar = bisect_threshold(
            lambda tt: gval(m + (tt / d) * np.ones(d)) <= 0.0, 0.0, t, tol=1e-13)
        mf = m + (tstar / d) * np.ones(d)
        return mf, float(mf.sum())

    scale = 1.0 + float(np.abs(Xv).max())
    start = push_to_feasible(np.zeros(d))
    if start is None:
        return PrimalResult(POS_INF, None, STATUS_INFEASIBLE)
    m_best, ub = start
    lb = NEG_INF
    box = max(16.0, 8.0 * scale, 2.0 * abs(ub))
    state = _KelleyState(d, box)
    g0, s0 = gval_and_sub(m_best)
    state.add_cut(s0, m_best, g0)
    tr: list = [] if trace else None
    iters = 0

    while iters < max_iter:
        iters += 1
        m_lp, lb_valid, maybe_unbounded = state.solve_certified()
        if maybe_unbounded:
            if m_lp is not None and _confirm_unbounded(m_lp, push_to_feasible):
                return PrimalResult(NEG_INF, None, STATUS_UNBOUNDED, iters,
                                    lower_bound=NEG_INF, solver_trace=tr)
            if m_lp is None:
                break
        cand_lb = float(m_lp.sum())
        if lb_valid:
            lb = max(lb, cand_lb)
        g, s = gval_and_sub(m_lp)
        if g <= 1e-12 * scale:
            if cand_lb < ub:
                ub, m_best = cand_lb, m_lp
        else:
            state.add_cut(s, m_lp, g)
            pushed = push_to_feasible(m_lp)
            if pushed is not None and pushed[1] < ub:
                m_best, ub = pushed
        if tr is not None:
            tr.append((iters, lb, ub))
        if ub - lb <= tol * max(1.0, abs(ub)):
            return PrimalResult(ub, m_best, STATUS_OPTIMAL, iters,
                                lower_bound=lb, solver_trace=tr)
        if lb < -UNBOUNDED_CAP:
            if _confirm_unbounded(m_lp, push_to_feasible):
                return PrimalResult(NEG_INF, None, STATUS_UNBOUNDED, iters,
                                    lower_bound=NEG_INF, solver_trace=tr)
    return PrimalResult(ub, m_best, STATUS_TOL, iters, lower_bound=lb, solver_trace=tr)


def _confirm_unbounded(direction_point: np.ndarray, push_to_feasible) -> bool:
    """March along the master's descent direction, repairing feasibility with a
    uniform injection; confirmed when the repaired cost still diverges."""
    nrm = float(np.linalg.norm(direction_point))
    if nrm <= 0.0:
        return False
    dvec = direction_point / nrm
    last = None
    for t in (1e3, 1e6, 1e9, 1e11):
        pushed = push_to_feasible(t * dvec)
        if pushed is None:
            return False
        cost = pushed[1]
        if last is not None and cost >= last:
            return False
        last = cost
    return last is not None and last < -UNBOUNDED_CAP


def rho_tilde(X: RandomVector, agg: AggregationSpec, acc: AcceptanceSpec,
              space: ScenarioSpace, tol: float = 1e-9) -> PrimalResult:
    """Least scalar added to the aggregated outcome to reach acceptability."""
    U = agg.eval_vector(X)
    value = acc.rho_cash(U, tol=tol)
    if value == POS_INF:
        return PrimalResult(POS_INF, None, STATUS_INFEASIBLE)
    if value == NEG_INF:
        return PrimalResult(NEG_INF, None, STATUS_UNBOUNDED)
    return PrimalResult(value, np.array([value]), STATUS_OPTIMAL, iterations=1,
                        lower_bound=value - tol)


def _zero_sum_directions(d: int) -> list[np.ndarray]:
    if d < 2:
        return []
    if d == 2:
        base = np.array([1.0, -1.0]) / math.sqrt(2.0)
        return [base, -base]
    b1 = np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)
    b2 = np.array([1.0, 1.0, -2.0]) / math.sqrt(6.0)
    out = []
    for k in range(12):
        ang = 2.0 * math.pi * k / 12.0
        out.append(math.cos(ang) * b1 + math.sin(ang) * b2)
    return out


def diagnostics(X_probe: RandomVector, agg: AggregationSpec, acc: AcceptanceSpec,
                space: ScenarioSpace, tol: float = 1e-6) -> Diagnostics:
    """Properness and representability checks for a configuration."""
    n, d = space.n, agg.d
    zero = RandomVector(np.zeros((d, n)))
    r0 = rho(zero, agg, acc, space, tol=tol, max_iter=400)
    rho_at_zero = r0.value

    trivial = True
    for dvec in _zero_sum_directions(d):
        for radius in (0.5, 1.0, 2.0, 5.0):
            m = radius * dvec
            val = agg.eval(m)
            if acc.contains(RandomVariable(np.full(n, val))):
                trivial = False
                break
        if not trivial:
            break

    neg_rejected = not any(
        acc.contains(RandomVariable(np.full(n, -delta))) for delta in (1e-3, 1.0, 10.0))

    dom_ok = False
    if agg.affine_dominance is not None:
        a, b = agg.affine_dominance
        rng = np.random.default_rng(7)
        pts = rng.uniform(-5.0, 5.0, size=(64, d))
        pts = np.vstack([pts, X_probe.values.T, np.zeros((1, d))])
        dom_ok = all(agg.eval(x) <= a * x.sum() + b + 1e-9 for x in pts)

    interior = None
    for t in (1.0, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0):
        val = agg.eval(t * np.ones(d))
        if acc.rho_cash(RandomVariable(np.full(n, val)), tol=1e-9) < -1e-6:
            interior = RandomVector(np.full((d, n), t))
            break

    return Diagnostics(rho_at_zero=rho_at_zero, M0_intersection_trivial=trivial,
                       affine_dominance_ok=dom_ok, interior_point_found=interior,
                       negative_constants_rejected=neg_rejected)
