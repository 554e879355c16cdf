"""Small dense linear programming via two-phase tableau simplex.

Intended for desk-scale problems (tens of rows/columns): the support
function of polyhedral acceptance sets and the cutting-plane master
problems. Bland's rule is used throughout, so the method terminates even
on degenerate instances.

Problem form: minimize c @ x subject to A_ub x <= b_ub, A_eq x = b_eq,
x >= 0. Statuses: "optimal", "unbounded", "infeasible".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError

_PIVOT_TOL = 1e-10
_FEAS_TOL = 1e-8


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    objective: float
    ray: np.ndarray | None = None  # improving feasible direction when unbounded


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and abs(T[r, col]) > 0.0:
            T[r] -= T[r, col] * T[row]
    basis[row] = col


def _run_simplex(T: np.ndarray, basis: np.ndarray, cost: np.ndarray,
                 allowed: np.ndarray, maxiter: int) -> tuple[str, int]:
    """Minimize cost over the tableau in place. Returns ('optimal', -1) or
    ('unbounded', entering_column)."""
    m = T.shape[0]
    for _ in range(maxiter):
        # reduced costs: c_j - c_B @ B^-1 A_j
        cb = cost[basis]
        red = cost - cb @ T[:, :-1]
        red[~allowed] = 0.0
        entering = -1
        for j in np.flatnonzero(red < -_PIVOT_TOL):  # Bland: smallest index
            entering = int(j)
            break
        if entering < 0:
            return "optimal", -1
        col = T[:, entering]
        ratios = np.full(m, np.inf)
        pos = col > _PIVOT_TOL
        ratios[pos] = T[pos, -1] / col[pos]
        if not np.any(np.isfinite(ratios)):
            return "unbounded", entering
        best = ratios.min()
        # Bland: among (near-)minimal ratios pick the row whose basic var has
        # the smallest column index
        cand = np.flatnonzero(ratios <= best + 1e-12)
        leave = int(cand[np.argmin(basis[cand])])
        _pivot(T, basis, leave, entering)
    raise SolverError("simplex iteration limit exceeded")


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
             maxiter: int = 5000) -> LPResult:
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    rows, rhs, is_eq = [], [], []
    if A_ub is not None:
        A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
        for a, b in zip(A_ub, np.asarray(b_ub, dtype=float).ravel()):
            rows.append(a)
            rhs.append(b)
            is_eq.append(False)
    if A_eq is not None:
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
        for a, b in zip(A_eq, np.asarray(b_eq, dtype=float).ravel()):
            rows.append(a)
            rhs.append(b)
            is_eq.append(True)
    m = len(rows)
    if m == 0:
        # unconstrained over the nonnegative orthant
        if np.all(c >= -_PIVOT_TOL):
            return LPResult("optimal", np.zeros(n), 0.0)
        return LPResult("unbounded", None, -np.inf)

    n_slack = sum(1 for e in is_eq if not e)
    width = n + n_slack + m + 1  # structural | slack | artificial | rhs
    T = np.zeros((m, width))
    basis = np.full(m, -1, dtype=int)
    need_artificial = []
    si = 0
    for r in range(m):
        a, b = rows[r], rhs[r]
        sign = 1.0 if b >= 0 else -1.0
        T[r, :n] = sign * a
        T[r, -1] = sign * b
        if not is_eq[r]:
            T[r, n + si] = sign
            if sign > 0:
                basis[r] = n + si
            si += 1
        if basis[r] < 0:
            need_artificial.append(r)
    for r in need_artificial:
        T[r, n + n_slack + r] = 1.0
        basis[r] = n + n_slack + r

    art_start = n + n_slack
    allowed = np.ones(width - 1, dtype=bool)

    if need_artificial:
        cost1 = np.zeros(width - 1)
        cost1[art_start:] = 1.0
        status, _ = _run_simplex(T, basis, cost1, allowed, maxiter)
        if status != "optimal":
            raise SolverError("phase-1 simplex reported unbounded")
        phase1 = float(cost1[basis] @ T[:, -1])
        if phase1 > _FEAS_TOL:
            return LPResult("infeasible", None, np.inf)
        # drive remaining artificials out of the basis; drop rows that are
        # redundant (no structural pivot available)
        for r in range(m):
            if basis[r] >= art_start:
                piv = -1
                for j in range(art_start):
                    if allowed[j] and abs(T[r, j]) > _PIVOT_TOL:
                        piv = j
                        break
                if piv >= 0:
                    _pivot(T, basis, r, piv)
                else:
                    T[r, :] = 0.0  # redundant constraint
                    basis[r] = art_start + r
    allowed[art_start:] = False

    cost2 = np.zeros(width - 1)
    cost2[:n] = c
    status, entering = _run_simplex(T, basis, cost2, allowed, maxiter)
    if status == "unbounded":
        # improving recession direction: raise the entering variable, adjust
        # the basis accordingly
        ray = np.zeros(width - 1)
        ray[entering] = 1.0
        for r in range(m):
            if basis[r] < width - 1:
                ray[basis[r]] = -T[r, entering]
        return LPResult("unbounded", None, -np.inf, ray=ray[:n])
    x = np.zeros(width - 1)
    for r in range(m):
        if basis[r] < width - 1:
            x[basis[r]] = T[r, -1]
    xs = x[:n]
    return LPResult("optimal", xs, float(c @ xs))


def solve_lp_free(c, A_ub, b_ub, A_eq=None, b_eq=None,
                  maxiter: int = 5000) -> LPResult:
    """minimize c @ x, A_ub x <= b_ub, with x free (split into x+ - x-)."""
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
    c2 = np.concatenate([c, -c])
    A2 = np.hstack([A_ub, -A_ub])
    Ae2 = be2 = None
    if A_eq is not None:
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
        Ae2 = np.hstack([A_eq, -A_eq])
        be2 = b_eq
    res = solve_lp(c2, A_ub=A2, b_ub=b_ub, A_eq=Ae2, b_eq=be2, maxiter=maxiter)
    if res.status != "optimal":
        ray = None if res.ray is None else res.ray[:n] - res.ray[n:]
        return LPResult(res.status, None, res.objective, ray=ray)
    return LPResult("optimal", res.x[:n] - res.x[n:], res.objective)
