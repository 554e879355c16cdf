"""Acceptance sets for aggregated outcomes: membership, support functions,
barrier cones and the induced cash-additive risk measure.

Value at Risk follows the strict-inequality convention
``inf { m : P(U + m < 0) <= level }`` and Expected Shortfall integrates it
exactly over levels via the breakpoints of the scenario distribution, so
acceptance tests are bit-stable on finite spaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatchError, ValidationError
from .optim import bisect_threshold
from .scenario import RandomVariable, ScenarioSpace, essential_inf
from .simplex import solve_lp_free

NEG_INF = float("-inf")
POS_INF = float("inf")
UNBOUNDED_CAP = 1e9
MEMBERSHIP_TOL = 1e-9
CONSTANT_REL_TOL = 1e-9


def var_level(U: RandomVariable, level: float, space: ScenarioSpace) -> float:
    """Value at Risk: least cash making the shortfall probability <= level."""
    _check_level(level)
    _check_dims(U, space)
    order = np.argsort(U.values, kind="stable")
    v = U.values[order]
    cum = np.cumsum(space.probs[order])
    # upper quantile: smallest value whose inclusive cdf strictly exceeds level
    idx = int(np.searchsorted(cum, level + 1e-12, side="right"))
    idx = min(idx, v.size - 1)
    return -float(v[idx])


def es_level(U: RandomVariable, level: float, space: ScenarioSpace) -> float:
    """Expected Shortfall: average of VaR over levels in (0, level].

    VaR is piecewise constant in the level, with breakpoints at the
    cumulative scenario probabilities, so the integral is a finite sum.
    """
    _check_level(level)
    _check_dims(U, space)
    order = np.argsort(U.values, kind="stable")
    v = U.values[order]
    cum = np.cumsum(space.probs[order])
    total = 0.0
    prev = 0.0
    for k in range(v.size):
        seg = min(cum[k], level) - min(prev, level)
        if seg > 0.0:
            total += -v[k] * seg
        prev = cum[k]
        if prev >= level:
            break
    return total / level


def _check_level(level: float) -> None:
    if not 0.0 < level < 1.0:
        raise ValidationError("risk level must lie strictly between 0 and 1")


def _check_dims(U: RandomVariable, space: ScenarioSpace) -> None:
    if U.n != space.n:
        raise DimensionMismatchError("random variable and space disagree on scenarios")


@dataclass(frozen=True)
class AcceptanceSpec:
    """Monotone convex closed acceptance set containing 0.

    Kinds:
      * ``nonnegative``: all scenario outcomes >= 0
      * ``expectation_floor``: E[U] >= u0 (u0 <= 0 so that 0 is acceptable)
      * ``expected_shortfall``: ES at the given level <= 0
      * ``polyhedral``: E[U W_i] >= a_i for supplied nonnegative scenario
        weights W_i and floors a_i <= 0
    """

    kind: str
    space: ScenarioSpace
    u0: float = 0.0
    level: float = 0.5
    weights: Optional[np.ndarray] = None
    floors: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "nonnegative":
            pass
        elif self.kind == "expectation_floor":
            if self.u0 > 0.0:
                raise ValidationError("expectation floor must be <= 0 so that 0 is acceptable")
        elif self.kind == "expected_shortfall":
            _check_level(self.level)
        elif self.kind == "polyhedral":
            W = np.atleast_2d(np.asarray(self.weights, dtype=float))
            a = np.asarray(self.floors, dtype=float).ravel()
            if W.shape[0] != a.size:
                raise ValidationError("polyhedral needs one floor per weight row")
            if W.shape[1] != self.space.n:
                raise DimensionMismatchError("polyhedral weights must span all scenarios")
            if np.any(W < 0.0):
                raise ValidationError("polyhedral weights must be nonnegative")
            if np.any(a > 0.0):
                raise ValidationError("polyhedral floors must be <= 0 so that 0 is acceptable")
            if not np.any(W @ self.space.probs > 0.0):
                raise ValidationError("polyhedral needs at least one weight row with mass")
            object.__setattr__(self, "weights", W)
            object.__setattr__(self, "floors", a)
        else:
            raise ValidationError(f"unknown acceptance kind {self.kind!r}")

    @property
    def n(self) -> int:
        return self.space.n

    def is_cone(self) -> bool:
        if self.kind in ("nonnegative", "expected_shortfall"):
            return True
        if self.kind == "expectation_floor":
            return self.u0 == 0.0
        return bool(np.all(self.floors == 0.0))

    def contains(self, U: RandomVariable, tol: float = MEMBERSHIP_TOL) -> bool:
        _check_dims(U, self.space)
        slack = tol * (1.0 + float(np.abs(U.values).max()))
        if self.kind == "nonnegative":
            return bool(U.values.min() >= -slack)
        if self.kind == "expectation_floor":
            return self.space.expectation(U.values) >= self.u0 - slack
        if self.kind == "expected_shortfall":
            return es_level(U, self.level, self.space) <= slack
        lhs = self.weights @ (self.space.probs * U.values)
        return bool(np.all(lhs >= self.floors - slack))

    def support_function(self, W: RandomVariable, tol: float = MEMBERSHIP_TOL) -> float:
        """Lower support value inf { E[U W] : U acceptable }; -inf outside the
        barrier cone. Boundary membership is treated as inclusive."""
        _check_dims(W, self.space)
        w = W.values
        scale = 1.0 + float(np.abs(w).max())
        if self.kind == "nonnegative":
            return 0.0 if w.min() >= -tol * scale else NEG_INF
        if self.kind == "expectation_floor":
            mean = self.space.expectation(w)
            # the barrier cone is the ray of constants; near-constant W is
            # treated as constant only within a tight relative tolerance
            if mean < -tol * scale:
                return NEG_INF
            if np.abs(w - mean).max() > CONSTANT_REL_TOL * max(1.0, abs(mean)):
                return NEG_INF
            return mean * self.u0
        if self.kind == "expected_shortfall":
            if w.min() < -tol * scale:
                return NEG_INF
            bound = self.space.expectation(w) / self.level
            return 0.0 if w.max() <= bound + tol * scale else NEG_INF
        return self._support_polyhedral(w)

    def _support_polyhedral(self, w: np.ndarray) -> float:
        # finite LP in the scenario outcomes; unbounded value means the
        # direction lies outside the barrier cone
        p = self.space.probs
        c = p * w
        A_ub = -(self.weights * p[None, :])
        b_ub = -self.floors
        res = solve_lp_free(c, A_ub, b_ub)
        if res.status == "unbounded":
            return NEG_INF
        if res.status != "optimal":
            raise ValidationError("polyhedral support LP reported infeasible acceptance set")
        return res.objective

    def in_barrier_cone(self, W: RandomVariable, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.support_function(W, tol=tol) > NEG_INF

    def rho_cash(self, U: RandomVariable, tol: float = 1e-9) -> float:
        """Least cash m with U + m acceptable, by bisection in m."""
        if tol <= 0:
            raise ValidationError("tolerance must be positive")
        _check_dims(U, self.space)
        span = 1.0 + float(np.ptp(U.values))

        def acceptable(m: float) -> bool:
            return self.contains(RandomVariable(U.values + m), tol=1e-12)

        hi = -essential_inf(U) + span
        while not acceptable(hi):
            hi = hi * 2.0 + span
            if hi > UNBOUNDED_CAP:
                return POS_INF
        lo = min(0.0, hi) - span
        while acceptable(lo):
            lo = lo * 2.0 - span
            if lo < -UNBOUNDED_CAP:
                return NEG_INF
        return bisect_threshold(acceptable, lo, hi, tol=tol)

    def strictly_positive_barrier_direction(self) -> Optional[RandomVariable]:
        """A strictly positive element of the barrier cone, when one is known."""
        ones = RandomVariable(np.ones(self.n))
        if self.kind in ("nonnegative", "expectation_floor", "expected_shortfall"):
            return ones
        combined = self.weights.sum(axis=0)
        if np.all(combined > 0.0):
            return RandomVariable(combined)
        return None

    # factories ---------------------------------------------------------------

    @classmethod
    def nonnegative(cls, space: ScenarioSpace) -> "AcceptanceSpec":
        return cls("nonnegative", space)

    @classmethod
    def expectation_floor(cls, space: ScenarioSpace, u0: float) -> "AcceptanceSpec":
        return cls("expectation_floor", space, u0=u0)

    @classmethod
    def expected_shortfall(cls, space: ScenarioSpace, level: float) -> "AcceptanceSpec":
        return cls("expected_shortfall", space, level=level)

    @classmethod
    def polyhedral(cls, space: ScenarioSpace, weights, floors) -> "AcceptanceSpec":
        return cls("polyhedral", space, weights=np.asarray(weights, dtype=float),
                   floors=np.asarray(floors, dtype=float))
