"""Scalar search primitives: golden section, geometric scans, bisection.

All routines are derivative-free and deterministic. They are shared by the
conjugate fallback, the penalty-function searches and the dual solvers.
"""

from __future__ import annotations

import math
from typing import Callable

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f: Callable[[float], float], lo: float, hi: float,
               tol: float = 1e-10, maxiter: int = 200) -> tuple[float, float]:
    """Maximize a unimodal function on [lo, hi]; returns (argmax, value)."""
    a, b = float(lo), float(hi)
    if b < a:
        a, b = b, a
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    it = 0
    while (b - a) > tol * (1.0 + abs(a) + abs(b)) and it < maxiter:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = f(x2)
        it += 1
    # include the endpoints: plateaus of -inf make interior probes unreliable
    cands = [(a, f(a)), (x1, f1), (x2, f2), (b, f(b))]
    cands = [(x, v) for x, v in cands if v == v]  # drop NaN
    return max(cands, key=lambda t: t[1])


def golden_min(f: Callable[[float], float], lo: float, hi: float,
               tol: float = 1e-10, maxiter: int = 200) -> tuple[float, float]:
    x, v = golden_max(lambda t: -f(t), lo, hi, tol=tol, maxiter=maxiter)
    return x, -v


def log_grid(lo: float, hi: float, count: int) -> list[float]:
    """Geometric grid on [lo, hi], lo > 0."""
    if count < 2:
        return [lo]
    r = (hi / lo) ** (1.0 / (count - 1))
    return [lo * r ** k for k in range(count)]


def scan_then_golden_max(f: Callable[[float], float], lo: float, hi: float,
                         count: int = 41, tol: float = 1e-10) -> tuple[float, float]:
    """Geometric scan on (lo, hi) followed by golden refinement around the best knot.

    Handles objectives that are -inf on part of the range; returns
    (x, -inf) when no finite value was found.
    """
    xs = log_grid(lo, hi, count)
    vals = [f(x) for x in xs]
    best = max(range(len(xs)), key=lambda i: vals[i])
    if vals[best] == -math.inf:
        return xs[best], -math.inf
    a = xs[best - 1] if best > 0 else xs[best] * 0.5
    b = xs[best + 1] if best + 1 < len(xs) else xs[best] * 2.0
    x, v = golden_max(f, a, b, tol=tol)
    if vals[best] > v:
        return xs[best], vals[best]
    return x, v


def expand_bracket_min(f: Callable[[float], float], x0: float = 0.0,
                       step: float = 1.0, cap: float = 1e12,
                       maxiter: int = 200) -> tuple[float, float] | None:
    """Find [lo, hi] containing a minimizer of a convex f, or None if f keeps
    decreasing past +-cap (treated as unbounded by the caller)."""
    lo, hi = x0 - step, x0 + step
    flo, f0, fhi = f(lo), f(x0), f(hi)
    it = 0
    while it < maxiter:
        if f0 <= flo and f0 <= fhi:
            return lo, hi
        if flo < fhi:
            lo, x0, hi = lo - (x0 - lo) * 2.0, lo, x0
            flo, f0, fhi = f(lo), flo, f0
        else:
            lo, x0, hi = x0, hi, hi + (hi - x0) * 2.0
            flo, f0, fhi = f0, fhi, f(hi)
        if abs(lo) > cap or abs(hi) > cap:
            return None
        it += 1
    return lo, hi


def bisect_threshold(pred: Callable[[float], bool], lo: float, hi: float,
                     tol: float = 1e-12, maxiter: int = 300) -> float:
    """Smallest t in [lo, hi] with pred(t) true, assuming pred is monotone
    (false below the threshold, true above). Requires pred(hi) true."""
    a, b = float(lo), float(hi)
    for _ in range(maxiter):
        if (b - a) <= tol * (1.0 + abs(a) + abs(b)):
            break
        mid = 0.5 * (a + b)
        if pred(mid):
            b = mid
        else:
            a = mid
    return b
