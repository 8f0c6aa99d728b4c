"""Command-line interface: ``solve``, ``certify`` and ``simulate``.

Exit codes: 0 success, 1 certification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .certify import certify
from .cost_models import check_one_update_viability
from .market import MarketInstance
from .pricing import (
    DEFAULT_EPSILON_REL,
    DEFAULT_K_CAP,
    ThresholdNotFoundError,
    compare_profits,
    social_optimum,
    solve_quantity_based,
    solve_time_dependent,
)
from .simulation import ScenarioDistribution, records_to_csv, run_monte_carlo

SCHEMA_VERSION = 1
CONFIG_KEYS = {"horizon", "age_cost", "op_cost", "solver"}
SOLVER_KEYS = {"k_cap", "epsilon_rel", "grid_n"}


class UsageError(Exception):
    pass


def round12(obj):
    """Round every float to 12 significant digits; NaN/inf become null."""
    if isinstance(obj, float):
        return float(f"{obj:.12g}") if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round12(v) for v in obj]
    return obj


def emit(payload: dict, stream=None) -> str:
    text = json.dumps(round12({"schema_version": SCHEMA_VERSION, **payload}), indent=2)
    print(text, file=stream or sys.stdout)
    return text


def load_config(path: str):
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as e:
        raise UsageError(f"cannot read config: {e}") from e
    except json.JSONDecodeError as e:
        raise UsageError(f"malformed JSON in {path}: {e}") from e
    if not isinstance(raw, dict):
        raise UsageError("config must be a JSON object")
    extra = set(raw) - CONFIG_KEYS
    if extra:
        raise UsageError(f"unknown config fields {sorted(extra)}")
    solver = raw.get("solver", {})
    if not isinstance(solver, dict) or set(solver) - SOLVER_KEYS:
        raise UsageError(f"solver options must be an object with keys among {sorted(SOLVER_KEYS)}")
    try:
        instance = MarketInstance.from_dict(raw)
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"invalid instance: {e!r}") from e
    return instance, solver


def _option(flag, solver: dict, key: str, default):
    return flag if flag is not None else solver.get(key, default)


def cmd_solve(args) -> int:
    instance, solver = load_config(args.config)
    k_cap = int(_option(args.k_cap, solver, "k_cap", DEFAULT_K_CAP))
    eps = float(_option(args.epsilon_rel, solver, "epsilon_rel", DEFAULT_EPSILON_REL))
    if k_cap < 1 or eps <= 0:
        raise UsageError("--k-cap must be >= 1 and --epsilon-rel > 0")
    viable = check_one_update_viability(instance)
    td = solve_time_dependent(instance)
    try:
        qb = solve_quantity_based(instance, k_cap, eps)
    except ThresholdNotFoundError as e:
        raise UsageError(f"{e}; raise --k-cap") from e
    k_soc, pol_soc, cost_soc = social_optimum(instance, min(k_cap, max(1000, qb.k_star + 1)))
    out = {
        "instance": instance.to_dict(),
        "degenerate": not viable,
        "time_dependent": td.to_dict(),
        "quantity_based": qb.to_dict(),
        "k_star": qb.k_star,
        "social_optimum": {"k": k_soc, "policy": pol_soc.to_dict(), "social_cost": cost_soc},
    }
    if viable:
        pi_t, pi_q, ratio = compare_profits(instance, k_cap)
        out["profit_ratio"] = ratio
    else:
        out["profit_ratio"] = None
        out["warning"] = "one update costs more than it is worth; no-update equilibrium"
    emit(out)
    return 0


def cmd_certify(args) -> int:
    instance, solver = load_config(args.config)
    n = int(_option(args.grid_n, solver, "grid_n", 500))
    if n < 100:
        raise UsageError("--grid-n must be at least 100")
    k_cap = _option(args.k_cap, solver, "k_cap", None)
    if k_cap is not None and int(k_cap) < 1:
        raise UsageError("--k-cap must be >= 1")
    eps = float(_option(args.epsilon_rel, solver, "epsilon_rel", DEFAULT_EPSILON_REL))
    checks = certify(instance, n, None if k_cap is None else int(k_cap),
                     dominance_trials=args.trials, seed=args.seed, epsilon_rel=eps)
    passed = all(c.passed for c in checks)
    emit({
        "grid_n": n,
        "passed": passed,
        "checks": [c.to_dict() for c in checks],
        "failed": [c.name for c in checks if not c.passed],
    })
    return 0 if passed else 1


def _threads() -> int:
    raw = os.environ.get("FRESHMARKET_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"FRESHMARKET_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise UsageError("FRESHMARKET_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def _writable(path: str) -> Path:
    p = Path(path)
    if not p.parent.is_dir():
        raise UsageError(f"output directory does not exist: {p.parent}")
    return p


def cmd_simulate(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    dist = ScenarioDistribution(trials=args.trials, seed=args.seed)
    csv_path = _writable(args.csv) if args.csv else None
    json_path = _writable(args.json) if args.json else None
    records, summary = run_monte_carlo(dist, workers=_threads())
    try:
        if csv_path:
            csv_path.write_text(records_to_csv(records))
        if json_path:
            json_path.write_text(json.dumps(round12({"schema_version": SCHEMA_VERSION, **summary}), indent=2))
    except OSError as e:
        raise UsageError(f"cannot write output: {e}") from e
    emit({"trials": dist.trials, "seed": dist.seed, "ratios": summary["ratios"]})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freshmarket", description="Pricing equilibria for a fresh-data market.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve both pricing equilibria and the social optimum")
    s.add_argument("--config", required=True)
    s.add_argument("--k-cap", type=int)
    s.add_argument("--epsilon-rel", type=float)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("certify", help="check analytic equilibria against the grid oracle")
    c.add_argument("--config", required=True)
    c.add_argument("--grid-n", type=int)
    c.add_argument("--k-cap", type=int)
    c.add_argument("--epsilon-rel", type=float)
    c.add_argument("--trials", type=int, default=20, help="random price grids for the dominance check")
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_certify)

    m = sub.add_parser("simulate", help="Monte Carlo comparison of the three schemes")
    m.add_argument("--trials", type=int, default=1000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--csv")
    m.add_argument("--json")
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main_exit() -> None:
    sys.exit(main())
