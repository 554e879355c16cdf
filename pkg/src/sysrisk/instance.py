"""Instance files, orchestration and machine-readable reports.

Instances and reports are JSON. Extended reals are encoded as the strings
"+inf" / "-inf" (IEEE specials do not survive JSON round-trips portably);
everything else is plain decimal floats. Reports are deterministic given
the instance and seed; wall-clock timings are the only nondeterministic
fields and are kept in their own block.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .acceptance import AcceptanceSpec
from .aggregation import AggregationSpec, UtilityFn
from .dual import (DualityReport, alpha, dual_rho, dual_rho_tilde,
                   support_systemic)
from .errors import DimensionMismatchError, ValidationError
from .oracle import GridSpec, alpha_raw_grid, default_m_grid, rho_grid, saddle_grid
from .primal import Diagnostics, PrimalResult, diagnostics, rho, rho_tilde
from .scenario import (DualVector, RandomVariable, RandomVector,
                       ScenarioSpace, in_dual_simplex, pairing)
from .shortfall import ShortfallSpec, rho_u_dual, rho_u_primal

MODES = ("rho", "rho_tilde", "shortfall")


@dataclass
class SolverConfig:
    tol: float = 1e-6
    max_iter: int = 10000
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValidationError("solver.tol must be positive")
        if self.max_iter < 1:
            raise ValidationError("solver.max_iter must be at least 1")


@dataclass
class Instance:
    space: ScenarioSpace
    X: RandomVector
    aggregation: AggregationSpec
    acceptance: AcceptanceSpec
    mode: str
    shortfall: Optional[ShortfallSpec] = None
    solver: SolverConfig = field(default_factory=SolverConfig)


def _need(obj: dict, key: str, ctx: str):
    if key not in obj:
        raise ValidationError(f"{ctx}: missing required field {key!r}")
    return obj[key]


def _parse_utility(obj: dict, ctx: str) -> UtilityFn:
    kind = _need(obj, "kind", ctx)
    if kind == "exponential":
        return UtilityFn("exponential", gamma=float(obj.get("gamma", 1.0)))
    if kind == "power":
        return UtilityFn("power", eta=float(obj.get("eta", 2.0)))
    if kind == "linear_capped":
        return UtilityFn("linear_capped", slope_neg=float(obj.get("slope_neg", 1.0)),
                         slope_pos=float(obj.get("slope_pos", 1.0)))
    raise ValidationError(f"{ctx}: unknown utility kind {kind!r}")


def _parse_aggregation(obj: dict, d: int) -> AggregationSpec:
    kind = _need(obj, "kind", "aggregation")
    if kind == "sum":
        return AggregationSpec.sum(d)
    if kind == "sum_of_losses":
        return AggregationSpec.sum_of_losses(d)
    if kind == "utility_of_sum":
        u = _parse_utility(_need(obj, "utility", "aggregation"), "aggregation.utility")
        return AggregationSpec.utility_of_sum(d, u)
    if kind == "componentwise_utility":
        us = [_parse_utility(o, f"aggregation.utilities[{i}]")
              for i, o in enumerate(_need(obj, "utilities", "aggregation"))]
        if len(us) != d:
            raise DimensionMismatchError(
                f"aggregation.utilities: expected {d} utilities, got {len(us)}")
        return AggregationSpec.componentwise(us)
    raise ValidationError(f"aggregation: unknown kind {kind!r}")


def _parse_acceptance(obj: dict, space: ScenarioSpace) -> AcceptanceSpec:
    kind = _need(obj, "kind", "acceptance")
    if kind == "nonnegative":
        return AcceptanceSpec.nonnegative(space)
    if kind == "expectation_floor":
        return AcceptanceSpec.expectation_floor(space, float(_need(obj, "u0", "acceptance")))
    if kind == "expected_shortfall":
        return AcceptanceSpec.expected_shortfall(space, float(_need(obj, "level", "acceptance")))
    if kind == "polyhedral":
        return AcceptanceSpec.polyhedral(space, _need(obj, "weights", "acceptance"),
                                         _need(obj, "floors", "acceptance"))
    raise ValidationError(f"acceptance: unknown kind {kind!r}")


def instance_from_dict(data: dict) -> Instance:
    if not isinstance(data, dict):
        raise ValidationError("instance root must be a JSON object")
    space = ScenarioSpace(np.asarray(_need(_need(data, "space", "root"), "probs", "space"),
                                     dtype=float))
    pos = np.atleast_2d(np.asarray(_need(data, "positions", "root"), dtype=float))
    X = RandomVector(pos)
    if X.n != space.n:
        raise DimensionMismatchError(
            f"positions: {X.n} scenario columns but the space has {space.n}")
    agg = _parse_aggregation(_need(data, "aggregation", "root"), X.d)
    acc = _parse_acceptance(_need(data, "acceptance", "root"), space)
    mode = data.get("mode", "rho")
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    shortfall = None
    if mode == "shortfall":
        sf = _need(data, "shortfall", "root")
        if X.d != 1:
            raise DimensionMismatchError("shortfall mode needs a single-row position matrix")
        shortfall = ShortfallSpec(_parse_utility(_need(sf, "utility", "shortfall"),
                                                 "shortfall.utility"),
                                  float(_need(sf, "u0", "shortfall")))
    solver = SolverConfig(**{k: v for k, v in data.get("solver", {}).items()
                             if k in ("tol", "max_iter", "restarts", "seed")})
    return Instance(space, X, agg, acc, mode, shortfall, solver)


def load_instance(path: str) -> Instance:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read instance file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"instance parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return instance_from_dict(data)


def _utility_dict(u: UtilityFn) -> dict:
    if u.kind == "exponential":
        return {"kind": "exponential", "gamma": u.gamma}
    if u.kind == "power":
        return {"kind": "power", "eta": u.eta}
    return {"kind": "linear_capped", "slope_neg": u.slope_neg, "slope_pos": u.slope_pos}


def serialize_instance(inst: Instance) -> dict:
    agg: dict = {"kind": inst.aggregation.kind}
    if inst.aggregation.kind == "utility_of_sum":
        agg["utility"] = _utility_dict(inst.aggregation.utility)
    elif inst.aggregation.kind == "componentwise_utility":
        agg["utilities"] = [_utility_dict(u) for u in inst.aggregation.utilities]
    acc: dict = {"kind": inst.acceptance.kind}
    if inst.acceptance.kind == "expectation_floor":
        acc["u0"] = inst.acceptance.u0
    elif inst.acceptance.kind == "expected_shortfall":
        acc["level"] = inst.acceptance.level
    elif inst.acceptance.kind == "polyhedral":
        acc["weights"] = inst.acceptance.weights.tolist()
        acc["floors"] = inst.acceptance.floors.tolist()
    out = {
        "space": {"probs": inst.space.probs.tolist()},
        "positions": inst.X.values.tolist(),
        "aggregation": agg,
        "acceptance": acc,
        "mode": inst.mode,
        "solver": {"tol": inst.solver.tol, "max_iter": inst.solver.max_iter,
                   "restarts": inst.solver.restarts, "seed": inst.solver.seed},
    }
    if inst.shortfall is not None:
        out["shortfall"] = {"utility": _utility_dict(inst.shortfall.utility),
                            "u0": inst.shortfall.u0}
    return out


def instance_hash(inst: Instance) -> str:
    blob = json.dumps(serialize_instance(inst), sort_keys=True,
                      separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------------------
# report assembly


def encode_real(x: float) -> object:
    if x != x:
        return "nan"
    if x == math.inf:
        return "+inf"
    if x == -math.inf:
        return "-inf"
    return float(x)


def decode_real(x: object) -> float:
    if x == "+inf":
        return math.inf
    if x == "-inf":
        return -math.inf
    if x == "nan":
        return math.nan
    return float(x)


def _primal_dict(res: PrimalResult) -> dict:
    return {
        "value": encode_real(res.value),
        "m_star": None if res.m_star is None else [float(v) for v in res.m_star],
        "status": res.status,
        "iterations": res.iterations,
        "lower_bound": encode_real(res.lower_bound),
    }


def _dual_dict(rep: DualityReport) -> dict:
    return {
        "value": encode_real(rep.dual_value),
        "gap_abs": encode_real(rep.gap_abs),
        "gap_rel": encode_real(rep.gap_rel),
        "converged": rep.converged,
        "degenerate": rep.degenerate,
        "Z_star": None if rep.Z_star is None else rep.Z_star.values.tolist(),
        "W_star": None if rep.W_star is None else rep.W_star.values.tolist(),
    }


def _diag_dict(diag: Diagnostics) -> dict:
    return {
        "rho_at_zero": encode_real(diag.rho_at_zero),
        "M0_intersection_trivial": diag.M0_intersection_trivial,
        "affine_dominance_ok": diag.affine_dominance_ok,
        "interior_point_found": diag.interior_point_found is not None,
        "negative_constants_rejected": diag.negative_constants_rejected,
        "proper": diag.proper,
    }


def solve(inst: Instance, with_diagnostics: bool = True) -> dict:
    t0 = time.perf_counter()
    cfg = inst.solver
    timings: dict = {}
    if inst.mode == "shortfall":
        U = RandomVariable(inst.X.values[0])
        rep = rho_u_dual(U, inst.shortfall, inst.space, tol=cfg.tol)
        primal = rep.primal
        diag = None
    elif inst.mode == "rho_tilde":
        primal = rho_tilde(inst.X, inst.aggregation, inst.acceptance, inst.space,
                           tol=min(cfg.tol, 1e-9))
        rep = dual_rho_tilde(inst.X, inst.aggregation, inst.acceptance, inst.space,
                             tol=min(cfg.tol, 1e-9), primal=primal)
        diag = (diagnostics(inst.X, inst.aggregation, inst.acceptance, inst.space)
                if with_diagnostics else None)
    else:
        primal = rho(inst.X, inst.aggregation, inst.acceptance, inst.space,
                     tol=cfg.tol, max_iter=cfg.max_iter)
        rep = dual_rho(inst.X, inst.aggregation, inst.acceptance, inst.space,
                       tol=cfg.tol, primal=primal)
        diag = (diagnostics(inst.X, inst.aggregation, inst.acceptance, inst.space)
                if with_diagnostics else None)
    timings["solve_s"] = time.perf_counter() - t0
    report = {
        "instance_hash": instance_hash(inst),
        "mode": inst.mode,
        "seed": cfg.seed,
        "primal": _primal_dict(primal),
        "dual": _dual_dict(rep),
        "diagnostics": None if diag is None else _diag_dict(diag),
        "timings": timings,
    }
    return report


def _sample_dual_vectors(inst: Instance, rng: np.random.Generator, count: int
                         ) -> list[DualVector]:
    d, n = inst.X.d, inst.space.n
    out = []
    for _ in range(count):
        Z = rng.exponential(1.0, size=(d, n))
        Z /= (Z @ inst.space.probs)[:, None]
        out.append(DualVector(Z))
    return out


def verify(inst: Instance) -> dict:
    """Solve plus a battery of invariant spot-checks recorded in the report."""
    report = solve(inst)
    t0 = time.perf_counter()
    rng = np.random.default_rng(inst.solver.seed)
    checks: list[dict] = []

    def record(name: str, passed: bool, detail: str = ""):
        checks.append({"name": name, "passed": bool(passed), "detail": detail})

    cfg = inst.solver
    X, agg, acc, space = inst.X, inst.aggregation, inst.acceptance, inst.space
    if inst.mode == "shortfall":
        U = RandomVariable(X.values[0])
        base = rho_u_primal(U, inst.shortfall, space)
        c = float(rng.uniform(-2.0, 2.0))
        shifted = rho_u_primal(RandomVariable(U.values + c), inst.shortfall, space)
        record("shortfall_cash_additivity", abs(shifted - (base - c)) <= 1e-6,
               f"shift {c}")
        gap = decode_real(report["dual"]["gap_abs"])
        record("shortfall_duality_gap", gap <= max(10 * cfg.tol, 1e-5 * (1 + abs(base))),
               f"gap {gap}")
    else:
        base = decode_real(report["primal"]["value"])
        if math.isfinite(base):
            m = rng.uniform(-1.0, 1.0, size=X.d)
            if inst.mode == "rho":
                shifted = rho(X.shifted(m), agg, acc, space, tol=cfg.tol).value
                record("cash_additivity", abs(shifted - (base - m.sum())) <= 50 * cfg.tol,
                       f"shift {m.tolist()}")
                bump = np.abs(rng.uniform(0.0, 1.0, size=X.values.shape))
                better = rho(RandomVector(X.values + bump), agg, acc, space, tol=cfg.tol).value
                record("monotonicity", better <= base + 50 * cfg.tol, "")
            else:
                c = float(rng.uniform(-1.0, 1.0))
                shifted = acc.rho_cash(
                    RandomVariable(agg.eval_vector(X).values + c), tol=1e-9)
                record("aggregate_cash_additivity",
                       abs(shifted - (base - c)) <= 1e-6, f"shift {c}")
            dual_v = decode_real(report["dual"]["value"])
            if math.isfinite(dual_v):
                record("weak_duality", dual_v <= base + 50 * cfg.tol,
                       f"dual {dual_v} primal {base}")
        for k, Z in enumerate(_sample_dual_vectors(inst, rng, 3)):
            pen = alpha(Z, agg, acc, space)
            record(f"penalty_nonpositive_{k}", pen.value <= 1e-9, f"value {pen.value}")
            if pen.value > -math.inf:
                pen2 = alpha(DualVector(2.0 * Z.values), agg, acc, space)
                record(f"penalty_homogeneous_{k}",
                       abs(pen2.value - 2.0 * pen.value) <= 1e-6 * (1 + abs(pen.value)),
                       "")
    Zs = _sample_dual_vectors(inst, rng, 1)[0]
    Xa = RandomVector(rng.normal(size=X.values.shape))
    Xb = RandomVector(rng.normal(size=X.values.shape))
    lhs = pairing(RandomVector(2.0 * Xa.values + Xb.values), Zs, space)
    rhs = 2.0 * pairing(Xa, Zs, space) + pairing(Xb, Zs, space)
    record("pairing_bilinear", abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs)), "")
    record("dual_simplex_membership_sampled", in_dual_simplex(Zs, space), "")

    report["checks"] = checks
    report["timings"]["verify_s"] = time.perf_counter() - t0
    return report


def oracle_run(inst: Instance, points_per_dim: int = 101) -> dict:
    """Solve plus grid-reference comparisons recorded in the report."""
    report = solve(inst, with_diagnostics=False)
    t0 = time.perf_counter()
    X, agg, acc, space = inst.X, inst.aggregation, inst.acceptance, inst.space
    oracle: dict = {}
    if X.d <= 3:
        grid = default_m_grid(X, points_per_dim)
        ref = rho_grid(X, agg, acc, space, grid)
        solver_value = rho(X, agg, acc, space, tol=inst.solver.tol).value
        step = float(grid.steps().max()) * X.d
        oracle["rho_grid"] = {
            "value": encode_real(ref),
            "solver": encode_real(solver_value),
            "grid_step": step,
            "within_two_steps": bool(
                ref >= solver_value - 1e-9 and ref - solver_value <= 2.0 * step)
            if math.isfinite(solver_value) and math.isfinite(ref) else False,
        }
    if X.d * space.n <= 6:
        rng = np.random.default_rng(inst.solver.seed)
        Z = _sample_dual_vectors(inst, rng, 1)[0]
        xgrid = GridSpec.uniform(-8.0, 8.0, points_per_dim, X.d)
        raw = alpha_raw_grid(Z, agg, acc, space, xgrid)
        pen = alpha(Z, agg, acc, space)
        oracle["alpha_raw_grid"] = {
            "value": encode_real(raw),
            "solver": encode_real(pen.value),
            "agreement": bool(abs(raw - pen.value) <= 2.0 * float(xgrid.steps().max()))
            if math.isfinite(raw) and math.isfinite(pen.value)
            else raw == pen.value,
        }
        sgrid = GridSpec.uniform(-6.0, 6.0, min(points_per_dim, 9), X.d)
        lhs, rhs = saddle_grid(Z, agg, acc, space, sgrid)
        oracle["saddle_grid"] = {"inf_sup": encode_real(lhs), "sup_inf": encode_real(rhs),
                                 "discrepancy": encode_real(lhs - rhs)}
    report["oracle"] = oracle
    report["timings"]["oracle_s"] = time.perf_counter() - t0
    return report
