"""Command-line entry point.

Exit codes: 0 success, 2 validation failure, 3 solver nonconvergence,
4 non-proper instance (the dual is skipped). The SYSRISK_LOG environment
variable (error, info, debug) controls logging verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .errors import ValidationError
from .instance import load_instance, oracle_run, solve, verify

log = logging.getLogger("sysrisk")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGED = 3
EXIT_NON_PROPER = 4


def _setup_logging() -> None:
    level = os.environ.get("SYSRISK_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")


def _apply_overrides(inst, args) -> None:
    if args.tol is not None:
        if args.tol <= 0:
            raise ValidationError("--tol must be positive")
        inst.solver.tol = args.tol
    if args.max_iter is not None:
        inst.solver.max_iter = args.max_iter
    if args.seed is not None:
        inst.solver.seed = args.seed


def _emit(report: dict, out_path: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=False)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _exit_code(report: dict) -> int:
    dual = report.get("dual", {})
    if dual.get("degenerate"):
        return EXIT_NON_PROPER
    if report["primal"]["status"] in ("tolerance_reached",):
        return EXIT_NONCONVERGED
    if not dual.get("converged", True):
        return EXIT_NONCONVERGED
    return EXIT_OK


def main(argv=None) -> int:
    _setup_logging()
    parser = argparse.ArgumentParser(prog="sysrisk",
                                     description="Finite-scenario systemic risk measures")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "verify", "oracle"):
        sp = sub.add_parser(name)
        sp.add_argument("instance")
        sp.add_argument("--out", default=None)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--max-iter", type=int, default=None, dest="max_iter")
        sp.add_argument("--seed", type=int, default=None)
        if name == "oracle":
            sp.add_argument("--grid", type=int, default=101,
                            help="points per dimension for the grid references")
    args = parser.parse_args(argv)

    try:
        inst = load_instance(args.instance)
        _apply_overrides(inst, args)
        log.info("loaded instance in mode %s (d=%d, n=%d)", inst.mode,
                 inst.X.d, inst.space.n)
        if args.command == "solve":
            report = solve(inst)
        elif args.command == "verify":
            report = verify(inst)
        else:
            report = oracle_run(inst, points_per_dim=args.grid)
    except ValidationError as exc:
        log.error("validation failure: %s", exc)
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    _emit(report, args.out)
    return _exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
