"""Cross-check the analytic equilibria against the grid oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .cost_models import check_one_update_viability
from .destination import grid_best_response, upsilon
from .market import MarketInstance, TimeDependent, TimeQuantity, evaluate_outcome
from .pricing import profit_upper_bound, solve_quantity_based, solve_time_dependent

RESOLUTION_FACTOR = 5.0


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, **self.detail}


def resolution_bound(instance: MarketInstance, n: int) -> float:
    """Cost tolerance 5*f(T)*T/n for comparing grid and continuous optima."""
    T = instance.horizon
    return RESOLUTION_FACTOR * float(instance.age_cost.f(T)) * T / n


def interval_spread(policy, horizon: float) -> float:
    xs = policy.intervals(horizon)
    return float(xs.max() - xs.min())


def check_quantity_equilibrium(instance: MarketInstance, n: int, k_cap=None, epsilon_rel: float = 1e-9) -> Check:
    """The oracle, facing the optimal quantity prices, buys K* evenly spaced updates."""
    eq = solve_quantity_based(instance, epsilon_rel=epsilon_rel)
    br = grid_best_response(instance, eq.scheme, n, k_cap)
    T = instance.horizon
    target = upsilon(instance, eq.scheme, eq.k_star)
    spread = interval_spread(br.policy, T)
    gap = abs(br.overall_cost - target)
    tol = resolution_bound(instance, n)
    ok = br.count == eq.k_star and spread <= 2 * T / n + 1e-12 * T and gap <= tol
    return Check("quantity_equilibrium", ok, {
        "k_star": eq.k_star, "oracle_k": br.count, "spread": spread,
        "spread_limit": 2 * T / n, "cost_gap": gap, "cost_tolerance": tol,
    })


def check_time_equilibrium(instance: MarketInstance, n: int, k_cap=None) -> Check:
    """The oracle, facing the constant price DF(T/2, T/2), buys one update near T/2."""
    eq = solve_time_dependent(instance)
    br = grid_best_response(instance, eq.scheme, n, k_cap)
    T = instance.horizon
    if eq.degenerate:
        ok = br.count == 0
        return Check("time_equilibrium", ok, {"degenerate": True, "oracle_k": br.count})
    # at exact break-even the source is indifferent and the oracle keeps zero updates
    expect = 1 if eq.profit > 0 else 0
    off = abs(br.policy.times[0] - T / 2) if br.count == 1 else None
    ok = br.count == expect and (off is None or off <= T / n)
    return Check("time_equilibrium", ok, {"oracle_k": br.count, "expected_k": expect, "offset": off})


def random_time_quantity_scheme(instance: MarketInstance, rng: np.random.Generator,
                                time_points: int = 16, k_max: int = 8) -> TimeQuantity:
    """Random non-negative price grid.

    Half the draws are uniform noise at a random scale; the other half jitter
    the per-count marginal age-cost savings d_k = (k)F(T/k) - (k+1)F(T/(k+1))
    over time, which lands close to the profitable region.
    """
    FT = instance.no_update_cost
    T = instance.horizon
    shape = (time_points + 1, k_max)
    if rng.random() < 0.5:
        scale = FT * 10.0 ** rng.uniform(-3.0, 0.0)
        grid = scale * rng.uniform(0.0, 1.0, size=shape)
    else:
        ks = np.arange(1, k_max + 1)
        saving = ks * instance.F(T / ks) - (ks + 1) * instance.F(T / (ks + 1))
        grid = saving[None, :] * rng.uniform(0.6, 1.2, size=shape)
    return TimeQuantity(grid, T / time_points)


def check_profit_dominance(instance: MarketInstance, n: int, trials: int, seed: int = 0,
                           k_cap=None) -> Check:
    """No random time-and-count price grid earns more than the quantity optimum."""
    rng = np.random.default_rng([seed, 3])
    bound = profit_upper_bound(instance)
    tol = resolution_bound(instance, n)
    worst = -np.inf
    for _ in range(trials):
        scheme = random_time_quantity_scheme(instance, rng)
        br = grid_best_response(instance, scheme, n, k_cap)
        worst = max(worst, evaluate_outcome(instance, scheme, br.policy).profit)
    ok = worst <= bound + tol
    return Check("profit_dominance", bool(ok), {
        "trials": trials, "best_adversarial_profit": float(worst),
        "quantity_profit": bound, "tolerance": tol,
    })


def certify(instance: MarketInstance, n: int, k_cap=None, dominance_trials: int = 20,
            seed: int = 0, epsilon_rel: float = 1e-9) -> List[Check]:
    checks = [check_time_equilibrium(instance, n, k_cap)]
    if check_one_update_viability(instance):
        checks.append(check_quantity_equilibrium(instance, n, k_cap, epsilon_rel))
    checks.append(check_profit_dominance(instance, n, dominance_trials, seed, k_cap))
    return checks
