"""Finite probability space, random vectors and the bilinear pairing.

All container types are immutable after construction (the backing numpy
arrays are frozen), so instances can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, ValidationError

PROB_SUM_TOL = 1e-12
DUAL_SIMPLEX_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ScenarioSpace:
    """Finite probability space with strictly positive scenario weights.

    Weights must sum to 1 within ``PROB_SUM_TOL``; the residual is removed by
    an exact renormalization. Zero-probability scenarios are rejected so that
    pointwise statements on the support are exact.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).ravel()
        if p.size == 0:
            raise ValidationError("scenario space needs at least one scenario")
        if not np.all(np.isfinite(p)):
            raise ValidationError("probabilities must be finite")
        if np.any(p <= 0.0):
            raise ValidationError("zero or negative probability scenario rejected")
        s = p.sum()
        if abs(s - 1.0) > PROB_SUM_TOL:
            raise ValidationError(
                f"probabilities sum to {s!r}, outside the {PROB_SUM_TOL} tolerance"
            )
        object.__setattr__(self, "probs", _frozen(p / s))

    @property
    def n(self) -> int:
        return self.probs.size

    def expectation(self, values: np.ndarray) -> float:
        return float(np.dot(self.probs, values))


@dataclass(frozen=True)
class RandomVariable:
    """Scalar payoff per scenario."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size == 0:
            raise ValidationError("random variable needs at least one scenario value")
        if not np.all(np.isfinite(v)):
            raise ValidationError("random variable entries must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class RandomVector:
    """Positions of d institutions over n scenarios, stored as a d x n matrix."""

    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.array(self.values, dtype=float))
        if v.ndim != 2 or v.size == 0:
            raise ValidationError("positions must form a nonempty d x n matrix")
        if not np.all(np.isfinite(v)):
            raise ValidationError("position entries must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def component(self, i: int) -> RandomVariable:
        return RandomVariable(self.values[i])

    def shifted(self, m: np.ndarray) -> "RandomVector":
        """Positions after a deterministic capital injection per institution."""
        m = np.asarray(m, dtype=float).ravel()
        if m.size != self.d:
            raise DimensionMismatchError("injection vector length must equal d")
        return RandomVector(self.values + m[:, None])


@dataclass(frozen=True)
class DualVector:
    """Dual variable: one state-price density candidate per institution (d x n)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.array(self.values, dtype=float))
        if v.ndim != 2 or v.size == 0:
            raise ValidationError("dual vector must form a nonempty d x n matrix")
        if not np.all(np.isfinite(v)):
            raise ValidationError("dual vector entries must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


def _check_same_shape(X: RandomVector, Z: DualVector, space: ScenarioSpace) -> None:
    if X.values.shape != Z.values.shape or X.n != space.n:
        raise DimensionMismatchError(
            f"shape mismatch: positions {X.values.shape}, dual {Z.values.shape}, "
            f"space n={space.n}"
        )


def pairing(X: RandomVector, Z: DualVector, space: ScenarioSpace) -> float:
    """Bilinear form: sum over institutions of E[X_i Z_i]."""
    _check_same_shape(X, Z, space)
    return float(np.sum(space.probs[None, :] * X.values * Z.values))


def in_dual_simplex(Z: DualVector, space: ScenarioSpace, tol: float = DUAL_SIMPLEX_TOL) -> bool:
    """True iff Z is componentwise nonnegative with unit expectation per row."""
    if Z.n != space.n:
        raise DimensionMismatchError("dual vector and space disagree on scenario count")
    if np.any(Z.values < -tol):
        return False
    means = Z.values @ space.probs
    return bool(np.all(np.abs(means - 1.0) <= tol))


def essential_sup(U: RandomVariable) -> float:
    return float(U.values.max())


def essential_inf(U: RandomVariable) -> float:
    return float(U.values.min())
