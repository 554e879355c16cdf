"""Finite-scenario systemic risk measures based on acceptance sets.

Primal solvers for the allocate-then-aggregate and aggregate-then-allocate
capital requirements, dual penalty functions over barrier-cone directions,
utility-based shortfall risk, grid oracles and a JSON CLI.
"""

from .acceptance import AcceptanceSpec, es_level, var_level
from .aggregation import (AdmissibilityReport, AggregationSpec, UtilityFn,
                          check_admissibility, exponential_utility,
                          linear_capped_utility, linear_utility, power_utility)
from .dual import (DualityReport, MinimaxReport, PenaltyEval, alpha,
                   alpha_tilde, conic_membership_D, dual_rho, dual_rho_tilde,
                   minimax_check, support_systemic)
from .errors import (DimensionMismatchError, IndeterminateValueError,
                     SolverError, SysriskError, ValidationError)
from .instance import (Instance, SolverConfig, instance_from_dict,
                       instance_hash, load_instance, oracle_run,
                       serialize_instance, solve, verify)
from .oracle import GridSpec, alpha_raw_grid, default_m_grid, rho_grid, saddle_grid
from .primal import (Diagnostics, PrimalResult, diagnostics, rho, rho_tilde)
from .scenario import (DualVector, RandomVariable, RandomVector, ScenarioSpace,
                       essential_inf, essential_sup, in_dual_simplex, pairing)
from .shortfall import ShortfallSpec, rho_u_dual, rho_u_primal

__version__ = "0.1.0"

__all__ = [
    "AcceptanceSpec", "AdmissibilityReport", "AggregationSpec", "Diagnostics",
    "DimensionMismatchError", "DualVector", "DualityReport", "GridSpec",
    "IndeterminateValueError", "Instance", "MinimaxReport", "PenaltyEval",
    "PrimalResult", "RandomVariable", "RandomVector", "ScenarioSpace",
    "ShortfallSpec", "SolverConfig", "SolverError", "SysriskError",
    "UtilityFn", "ValidationError", "alpha", "alpha_raw_grid", "alpha_tilde",
    "check_admissibility", "conic_membership_D", "default_m_grid",
    "diagnostics", "dual_rho", "dual_rho_tilde", "es_level", "essential_inf",
    "essential_sup", "exponential_utility", "in_dual_simplex",
    "instance_from_dict", "instance_hash", "linear_capped_utility",
    "linear_utility", "load_instance", "minimax_check", "oracle_run",
    "pairing", "power_utility", "rho", "rho_grid", "rho_tilde", "rho_u_dual",
    "rho_u_primal", "saddle_grid", "serialize_instance", "solve",
    "support_systemic", "var_level", "verify",
]
