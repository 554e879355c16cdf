"""Aggregation maps: scenario-wise impact of a position vector.

An aggregation map is a concave nondecreasing function on R^d with value 0
at the origin. Built-in kinds carry hand-derived closed forms for the
concave conjugate

    conj(z) = inf_x { <x, z> - Lambda(x) }

which the dual side consumes pointwise; custom kinds fall back to a
derivative-free numeric search with an unboundedness probe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import IndeterminateValueError, ValidationError
from .optim import expand_bracket_min, golden_min
from .scenario import RandomVariable, RandomVector

NEG_INF = float("-inf")
UNBOUNDED_CAP = 1e9


# ---------------------------------------------------------------------------
# utilities


@dataclass(frozen=True)
class UtilityFn:
    """Concave increasing scalar utility with u(0) = 0.

    Kinds:
      * ``exponential``: u(x) = 1 - exp(-gamma x), gamma > 0
      * ``power``: linear for x <= 0, constant-relative-risk-aversion branch
        ((1+x)^(1-eta) - 1)/(1-eta) for x > 0 (log for eta = 1)
      * ``linear_capped``: a * min(x, 0) + b * max(x, 0) with a >= b > 0;
        a == b gives the linear utility
    """

    kind: str
    gamma: float = 1.0
    eta: float = 2.0
    slope_neg: float = 1.0
    slope_pos: float = 1.0

    def __post_init__(self):
        if self.kind == "exponential":
            if not self.gamma > 0:
                raise ValidationError("exponential utility needs gamma > 0")
        elif self.kind == "power":
            if not self.eta > 0:
                raise ValidationError("power utility needs eta > 0")
        elif self.kind == "linear_capped":
            if not (self.slope_neg >= self.slope_pos > 0):
                raise ValidationError("linear_capped needs slope_neg >= slope_pos > 0")
        else:
            raise ValidationError(f"unknown utility kind {self.kind!r}")
        grid = np.linspace(-3.0, 3.0, 13)
        vals = self(grid)
        if np.any(np.diff(vals) < -1e-12):
            raise ValidationError("utility must be nondecreasing on the probe grid")
        if np.ptp(vals) <= 1e-12:
            raise ValidationError("utility must be nonconstant")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "exponential":
            return 1.0 - np.exp(-self.gamma * x)
        if self.kind == "power":
            pos = np.maximum(x, 0.0)
            if self.eta == 1.0:
                up = np.log1p(pos)
            else:
                up = (np.power(1.0 + pos, 1.0 - self.eta) - 1.0) / (1.0 - self.eta)
            return np.minimum(x, 0.0) + up
        return self.slope_neg * np.minimum(x, 0.0) + self.slope_pos * np.maximum(x, 0.0)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "exponential":
            return self.gamma * np.exp(-self.gamma * x)
        if self.kind == "power":
            return np.where(x <= 0.0, 1.0, np.power(1.0 + np.maximum(x, 0.0), -self.eta))
        return np.where(x < 0.0, self.slope_neg, self.slope_pos)

    # asymptotic derivatives, used for boundedness tests in dual inner problems
    def slope_at_neg_inf(self) -> float:
        if self.kind == "exponential":
            return math.inf
        if self.kind == "power":
            return 1.0
        return self.slope_neg

    def slope_at_pos_inf(self) -> float:
        if self.kind == "exponential":
            return 0.0
        if self.kind == "power":
            return 0.0
        return self.slope_pos

    def conj(self, z: float, tol: float = 1e-9) -> float:
        """Concave conjugate inf_x { x z - u(x) }."""
        if z < -tol:
            return NEG_INF
        z = max(z, 0.0)
        if self.kind == "exponential":
            g = self.gamma
            if z == 0.0:
                return -1.0
            r = z / g
            return -r * math.log(r) + r - 1.0
        if self.kind == "power":
            if z > 1.0 + tol:
                return NEG_INF
            z = min(z, 1.0)
            if z == 0.0:
                return -1.0 / (self.eta - 1.0) if self.eta > 1.0 else NEG_INF
            if self.eta == 1.0:
                return 1.0 - z + math.log(z)
            w = z ** ((self.eta - 1.0) / self.eta)
            return w - z - (w - 1.0) / (1.0 - self.eta)
        if self.slope_pos - tol <= z <= self.slope_neg + tol:
            return 0.0
        return NEG_INF

    def conj_argmin(self, z: float) -> Optional[float]:
        """A minimizer of x z - u(x), where one exists."""
        if self.kind == "exponential":
            if z <= 0.0:
                return None
            return -math.log(z / self.gamma) / self.gamma
        if self.kind == "power":
            if z <= 0.0 or z > 1.0:
                return None
            return z ** (-1.0 / self.eta) - 1.0
        if self.slope_pos <= z <= self.slope_neg:
            return 0.0
        return None

    def conj_domain(self) -> tuple[float, float]:
        """Interval of z where the conjugate is finite (closure)."""
        if self.kind == "exponential":
            return 0.0, math.inf
        if self.kind == "power":
            return 0.0, 1.0
        return self.slope_pos, self.slope_neg


def exponential_utility(gamma: float = 1.0) -> UtilityFn:
    return UtilityFn("exponential", gamma=gamma)


def power_utility(eta: float = 2.0) -> UtilityFn:
    return UtilityFn("power", eta=eta)


def linear_capped_utility(slope_neg: float = 1.0, slope_pos: float = 1.0) -> UtilityFn:
    return UtilityFn("linear_capped", slope_neg=slope_neg, slope_pos=slope_pos)


def linear_utility() -> UtilityFn:
    return linear_capped_utility(1.0, 1.0)


# ---------------------------------------------------------------------------
# aggregation specs


@dataclass(frozen=True)
class AggregationSpec:
    """Concave nondecreasing aggregation of d institution positions.

    ``affine_dominance`` is a pair (a, b) with Lambda(x) <= a * sum(x) + b
    everywhere; built-ins carry exact values, custom kinds may supply one
    (it is verified on a grid by diagnostics, not trusted blindly).
    ``dual_cone_interval`` is an optional hook for custom positively
    homogeneous kinds: given a column z >= 0 it returns the interval of
    scales w with z/w inside the conjugate's finiteness region.
    """

    kind: str
    d: int
    utility: Optional[UtilityFn] = None
    utilities: tuple[UtilityFn, ...] = ()
    fn: Optional[Callable[[np.ndarray], float]] = None
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    conj_fn: Optional[Callable[[np.ndarray], float]] = None
    positively_homogeneous: bool = False
    affine_dominance: Optional[tuple[float, float]] = None
    dual_cone_interval_fn: Optional[Callable[[np.ndarray], Optional[tuple[float, float]]]] = None

    def __post_init__(self):
        if self.d < 1:
            raise ValidationError("aggregation needs d >= 1")
        if self.kind == "utility_of_sum" and self.utility is None:
            raise ValidationError("utility_of_sum needs a utility")
        if self.kind == "componentwise_utility" and len(self.utilities) != self.d:
            raise ValidationError("componentwise_utility needs one utility per institution")
        if self.kind == "custom" and self.fn is None:
            raise ValidationError("custom aggregation needs a callable")
        z0 = abs(self.eval(np.zeros(self.d)))
        if z0 > 1e-12:
            raise ValidationError(f"aggregation must vanish at 0, got {z0}")

    # -- evaluation ---------------------------------------------------------

    def eval(self, x) -> float:
        x = np.asarray(x, dtype=float).ravel()
        return float(self._eval_matrix(x[:, None])[0])

    def _eval_matrix(self, X: np.ndarray) -> np.ndarray:
        """Columns of X are points in R^d; returns one value per column."""
        if self.kind == "sum":
            return X.sum(axis=0)
        if self.kind == "sum_of_losses":
            return np.minimum(X, 0.0).sum(axis=0)
        if self.kind == "utility_of_sum":
            return np.asarray(self.utility(X.sum(axis=0)), dtype=float)
        if self.kind == "componentwise_utility":
            return np.sum([u(X[i]) for i, u in enumerate(self.utilities)], axis=0)
        return np.array([self.fn(X[:, j]) for j in range(X.shape[1])], dtype=float)

    def eval_vector(self, X: RandomVector) -> RandomVariable:
        if X.d != self.d:
            raise ValidationError(f"aggregation is for d={self.d}, positions have d={X.d}")
        return RandomVariable(self._eval_matrix(X.values))

    def supergradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if self.kind == "sum":
            return np.ones(self.d)
        if self.kind == "sum_of_losses":
            return (x <= 0.0).astype(float)
        if self.kind == "utility_of_sum":
            return float(self.utility.deriv(x.sum())) * np.ones(self.d)
        if self.kind == "componentwise_utility":
            return np.array([float(u.deriv(x[i])) for i, u in enumerate(self.utilities)])
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        h = 1e-6 * (1.0 + np.abs(x))
        g = np.empty(self.d)
        for i in range(self.d):
            e = np.zeros(self.d)
            e[i] = h[i]
            g[i] = (self.fn(x + e) - self.fn(x - e)) / (2.0 * h[i])
        return g

    def value_at_ones(self) -> float:
        return self.eval(np.ones(self.d))

    # -- concave conjugate ---------------------------------------------------

    def concave_conjugate(self, z, tol: float = 1e-9) -> float:
        """inf_x { <x, z> - Lambda(x) }, -inf when unbounded below."""
        if tol <= 0:
            raise ValidationError("conjugate tolerance must be positive")
        z = np.asarray(z, dtype=float).ravel()
        if z.size != self.d:
            raise ValidationError("conjugate argument has wrong dimension")
        if self.kind == "sum":
            return 0.0 if np.all(np.abs(z - 1.0) <= tol) else NEG_INF
        if self.kind == "sum_of_losses":
            return 0.0 if np.all((z >= -tol) & (z <= 1.0 + tol)) else NEG_INF
        if self.kind == "utility_of_sum":
            zbar = float(z.mean())
            scale = max(1.0, abs(zbar))
            if np.any(np.abs(z - zbar) > tol * scale):
                return NEG_INF
            return self.utility.conj(zbar, tol=tol)
        if self.kind == "componentwise_utility":
            total = 0.0
            for i, u in enumerate(self.utilities):
                v = u.conj(float(z[i]), tol=tol)
                if v == NEG_INF:
                    return NEG_INF
                total += v
            return total
        if self.conj_fn is not None:
            return float(self.conj_fn(z))
        return self._conjugate_numeric(z, tol)

    def conjugate_batch(self, Y: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Conjugate per column of a d x k matrix."""
        return np.array([self.concave_conjugate(Y[:, j], tol=tol) for j in range(Y.shape[1])])

    def _conjugate_numeric(self, z: np.ndarray, tol: float,
                           max_passes: int = 120) -> float:
        f = lambda x: float(np.dot(x, z)) - self.fn(x)
        # unboundedness probe along coordinate rays, the diagonal and a few
        # fixed mixed directions
        dirs = []
        for i in range(self.d):
            e = np.zeros(self.d)
            e[i] = 1.0
            dirs += [e.copy(), -e]
        dirs += [np.ones(self.d), -np.ones(self.d)]
        if self.d >= 2:
            mix = np.ones(self.d)
            mix[0] = -1.0
            dirs += [mix, -mix]
        for dvec in dirs:
            for t in (1e2, 1e4, 1e6, 1e9):
                if f(t * dvec) < -UNBOUNDED_CAP:
                    return NEG_INF
        x = np.zeros(self.d)
        best = f(x)
        for _ in range(max_passes):
            improved = 0.0
            for i in range(self.d):
                def line(t, i=i):
                    xx = x.copy()
                    xx[i] = t
                    return f(xx)
                br = expand_bracket_min(line, x0=float(x[i]), step=1.0 + abs(float(x[i])))
                if br is None:
                    return NEG_INF
                t, v = golden_min(line, br[0], br[1], tol=1e-12)
                if v < best - 1e-15:
                    improved += best - v
                    best = v
                    x[i] = t
            if best < -UNBOUNDED_CAP:
                return NEG_INF
            if improved <= tol * (1.0 + abs(best)):
                return best
        raise IndeterminateValueError(
            "numeric conjugate did not converge and was not certified unbounded"
        )

    def dual_cone_interval(self, zcol: np.ndarray, tol: float = 1e-9
                           ) -> Optional[tuple[float, float]]:
        """For positively homogeneous kinds: the set {w > 0 : conj(z/w) finite}
        along one scenario column, as a closed interval, or None when empty.
        A (0.0, 0.0) interval means only w = 0 with z = 0 works."""
        z = np.asarray(zcol, dtype=float).ravel()
        if self.kind == "sum":
            if np.all(np.abs(z) <= tol):
                return (0.0, 0.0)  # only the zero scale works
            zbar = float(z.mean())
            if zbar > 0 and np.all(np.abs(z - zbar) <= tol * max(1.0, abs(zbar))):
                return (zbar, zbar)
            return None
        if self.kind == "sum_of_losses":
            if np.any(z < -tol):
                return None
            return (max(float(z.max()), 0.0), math.inf)
        if self.dual_cone_interval_fn is not None:
            return self.dual_cone_interval_fn(z)
        if np.all(np.abs(z) <= tol):
            return (0.0, 0.0)
        return None

    # -- factories -----------------------------------------------------------

    @classmethod
    def sum(cls, d: int) -> "AggregationSpec":
        return cls("sum", d, positively_homogeneous=True, affine_dominance=(1.0, 0.0))

    @classmethod
    def sum_of_losses(cls, d: int) -> "AggregationSpec":
        return cls("sum_of_losses", d, positively_homogeneous=True,
                   affine_dominance=(1.0, 0.0))

    @classmethod
    def utility_of_sum(cls, d: int, utility: UtilityFn) -> "AggregationSpec":
        a, b = _utility_dominance(utility)
        return cls("utility_of_sum", d, utility=utility, affine_dominance=(a, b))

    @classmethod
    def componentwise(cls, utilities: Sequence[UtilityFn]) -> "AggregationSpec":
        utilities = tuple(utilities)
        dom = _componentwise_dominance(utilities)
        return cls("componentwise_utility", len(utilities), utilities=utilities,
                   affine_dominance=dom)

    @classmethod
    def custom(cls, d: int, fn, grad=None, conj=None, positively_homogeneous=False,
               affine_dominance=None, dual_cone_interval=None) -> "AggregationSpec":
        return cls("custom", d, fn=fn, grad=grad, conj_fn=conj,
                   positively_homogeneous=positively_homogeneous,
                   affine_dominance=affine_dominance,
                   dual_cone_interval_fn=dual_cone_interval)


def _utility_dominance(u: UtilityFn) -> tuple[float, float]:
    # u concave with u(0) = 0, so u(x) <= u'(0+) x; the positive-side slope
    # at the origin is the tightest single-slope dominator
    if u.kind == "exponential":
        return u.gamma, 0.0
    if u.kind == "power":
        return 1.0, 0.0
    return u.slope_pos, 0.0


def _componentwise_dominance(utilities: tuple[UtilityFn, ...]
                             ) -> Optional[tuple[float, float]]:
    # need one common slope a with every conjugate finite at a; then
    # sum u_i(x_i) <= a sum x_i - sum conj_i(a)
    lo = max(u.conj_domain()[0] for u in utilities)
    hi = min(u.conj_domain()[1] for u in utilities)
    if lo > hi:
        return None
    if math.isinf(hi):
        a = max(lo, 1.0)
    else:
        a = 0.5 * (lo + hi) if lo < hi else lo
    vals = [u.conj(a) for u in utilities]
    if any(v == NEG_INF for v in vals):
        # closed endpoint not attainable (open domain edge); nudge inward
        a = 0.5 * (a + hi) if hi > a else a
        vals = [u.conj(a) for u in utilities]
        if any(v == NEG_INF for v in vals):
            return None
    return a, -float(sum(vals))


# ---------------------------------------------------------------------------
# admissibility checks


@dataclass
class AdmissibilityReport:
    ok: bool
    violations: list = field(default_factory=list)


def check_admissibility(agg: AggregationSpec, grid: np.ndarray,
                        tol: float = 1e-9) -> AdmissibilityReport:
    """Spot-check normalization, monotonicity, concavity and (if flagged)
    positive homogeneity on the supplied grid of points (rows in R^d)."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    violations = []
    z0 = agg.eval(np.zeros(agg.d))
    if abs(z0) > 1e-12:
        violations.append(f"normalization: Lambda(0) = {z0}")
    vals = np.array([agg.eval(x) for x in grid])
    for k, x in enumerate(grid):
        for i in range(agg.d):
            e = np.zeros(agg.d)
            e[i] = 0.5
            if agg.eval(x + e) < vals[k] - tol:
                violations.append(
                    f"monotonicity: Lambda decreased along +e_{i} at {x.tolist()}")
    n = len(grid)
    for a in range(n):
        for b in range(a + 1, n):
            mid = 0.5 * (grid[a] + grid[b])
            lhs = agg.eval(mid)
            rhs = 0.5 * (vals[a] + vals[b])
            if lhs < rhs - tol:
                violations.append(
                    f"concavity: midpoint of {grid[a].tolist()} and {grid[b].tolist()} "
                    f"gives {lhs} < {rhs}")
    if agg.positively_homogeneous:
        for x in grid:
            base = agg.eval(x)
            for t in (0.5, 2.0, 7.5):
                if abs(agg.eval(t * x) - t * base) > tol * (1.0 + abs(t * base)):
                    violations.append(
                        f"homogeneity: Lambda({t} x) != {t} Lambda(x) at {x.tolist()}")
                    break
    return AdmissibilityReport(ok=not violations, violations=violations)
