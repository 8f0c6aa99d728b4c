"""Source (leader) pricing: time-dependent and quantity-based equilibria,
the fixed-count time-dependent value function, the social optimum and the
profit ceiling over all time-and-count price rules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .cost_models import (
    check_one_update_viability,
    differential_age_cost,
    marginal_operational_cost,
)
from .market import (
    MarketInstance,
    QuantityBased,
    TimeDependent,
    UpdatePolicy,
    equal_spaced_policy,
    sentinel_price,
)

DEFAULT_K_CAP = 10_000
DEFAULT_EPSILON_REL = 1e-9
N_STARTS = 32


class ThresholdNotFoundError(RuntimeError):
    """Marginal revenue still covers marginal cost at the scan cap."""


class BoundViolationError(AssertionError):
    """The quantity/time profit sandwich failed."""


@dataclass(frozen=True)
class TimeDependentEquilibrium:
    scheme: TimeDependent
    price: float
    update_time: Optional[float]
    profit: float
    degenerate: bool = False

    @property
    def policy(self) -> UpdatePolicy:
        return UpdatePolicy(() if self.update_time is None else (self.update_time,))

    def to_dict(self) -> dict:
        return {
            "price": self.price,
            "update_time": self.update_time,
            "profit": self.profit,
            "degenerate": self.degenerate,
            "policy": self.policy.to_dict(),
        }


@dataclass(frozen=True)
class QuantityEquilibrium:
    k_star: int
    k_hat: int
    prices: Tuple[float, ...]
    policy: UpdatePolicy
    profit: float
    epsilon: float
    degenerate: bool = False

    @property
    def scheme(self) -> QuantityBased:
        return QuantityBased(self.prices)

    def to_dict(self) -> dict:
        return {
            "k_star": self.k_star,
            "k_hat": self.k_hat,
            "prices": list(self.prices),
            "policy": self.policy.to_dict(),
            "profit": self.profit,
            "epsilon": self.epsilon,
            "degenerate": self.degenerate,
        }


def half_split_value(instance: MarketInstance) -> float:
    half = instance.horizon / 2.0
    return differential_age_cost(instance.age_cost, half, half)


def solve_time_dependent(instance: MarketInstance, sentinel: bool = False,
                         steps: int = 10_000) -> TimeDependentEquilibrium:
    """Optimal time-dependent price: the constant DF(T/2, T/2), one update at T/2.

    With ``sentinel`` the price is posted only at the grid point nearest T/2
    and every other instant carries the sentinel price, which pins the
    destination's choice instead of leaving it indifferent.
    """
    if not check_one_update_viability(instance):
        block = sentinel_price(instance)
        return TimeDependentEquilibrium(TimeDependent.constant(block), block, None, 0.0, True)
    T = instance.horizon
    price = half_split_value(instance)
    if sentinel:
        block = sentinel_price(instance)
        prices = [block] * (steps + 1)
        prices[steps // 2] = price
        scheme = TimeDependent(tuple(prices), T / steps)
    else:
        scheme = TimeDependent.constant(price)
    return TimeDependentEquilibrium(scheme, price, T / 2.0, price - instance.C(1))


def _revenue(instance: MarketInstance, x: np.ndarray):
    """Sum of DF(x_{j+1}, x_j); x may be a batch of rows."""
    F = instance.F
    a, b = x[..., 1:], x[..., :-1]
    return np.sum(F(a + b) - F(a) - F(b), axis=-1)


def _pattern_search(instance: MarketInstance, x: np.ndarray, tol: float) -> Tuple[float, np.ndarray]:
    # Best pairwise mass move per round; halve the step when none helps.
    T = instance.horizon
    m = len(x)
    src, dst = np.array([(a, b) for a in range(m) for b in range(m) if a != b]).T
    rows = np.arange(len(src))
    best = float(_revenue(instance, x))
    step = 0.25 * T / m
    while step >= tol:
        s = np.minimum(step, 0.5 * x[dst])
        cand = np.repeat(x[None, :], len(src), axis=0)
        cand[rows, src] += s
        cand[rows, dst] -= s
        vals = _revenue(instance, cand)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, x = float(vals[i]), cand[i]
        else:
            step *= 0.5
    return best, x


def time_dependent_k_update_value(
    instance: MarketInstance,
    k: int,
    starts: int = N_STARTS,
    seed: int = 0,
    step_tol_rel: float = 1e-8,
) -> Tuple[float, np.ndarray]:
    """Best found value of sum DF(x_{j+1}, x_j) - C(k) over positive intervals summing to T.

    Multi-start local search: the equal split plus ``starts - 1`` uniform
    simplex samples, each refined by pairwise mass moves. Ties between starts
    keep the lowest start index.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return 0.0, np.array([instance.horizon])
    T = instance.horizon
    rng = np.random.default_rng(seed)
    seeds = [np.full(k + 1, T / (k + 1))]
    seeds += [T * rng.dirichlet(np.ones(k + 1)) for _ in range(starts - 1)]
    best_v, best_x = -math.inf, None
    for x0 in seeds:
        v, x = _pattern_search(instance, x0, step_tol_rel * T)
        if v > best_v:
            best_v, best_x = v, x
    return best_v - instance.C(k), best_x


def _aoi_after(instance: MarketInstance, k: int) -> float:
    T = instance.horizon
    return (k + 1) * instance.F(T / (k + 1))


def marginal_revenue(instance: MarketInstance, k: float) -> float:
    """f(u)u - F(u) with u = T/(k+1): the source's marginal revenue in k."""
    u = instance.horizon / (k + 1)
    return instance.age_cost.f(u) * u - instance.F(u)


def threshold_count(instance: MarketInstance, k_cap: int = DEFAULT_K_CAP) -> int:
    """Largest k whose marginal revenue still covers the marginal cost.

    The gap marginal_revenue - C' is non-increasing in k, so the first k
    where the gap at k+1 goes negative is the unique bracket.
    """
    op = instance.op_cost
    if marginal_revenue(instance, 0) < marginal_operational_cost(op, 0):
        raise ThresholdNotFoundError("marginal revenue below marginal cost already at K=0")
    for k in range(k_cap + 1):
        if marginal_revenue(instance, k + 1) < marginal_operational_cost(op, k + 1):
            return k
    raise ThresholdNotFoundError(f"no threshold count within K_cap={k_cap}")


def quantity_prices(instance: MarketInstance, k_star: int, epsilon: float) -> Tuple[float, ...]:
    """Price list whose cumulative sums track F(T) - (k+1)F(T/(k+1)).

    Counts below k_star are overpriced by ``epsilon`` in cumulative terms, so
    stopping early is strictly worse; the k_star-th price closes the sum
    exactly, and later counts repeat that closing price.
    """
    FT = instance.no_update_cost
    prices = []
    paid = 0.0
    for k in range(1, k_star):
        p = FT - _aoi_after(instance, k) - paid + epsilon
        prices.append(p)
        paid += p
    prices.append(FT - _aoi_after(instance, k_star) - paid)
    return tuple(prices)


def _degenerate_quantity(instance: MarketInstance, epsilon: float, k_hat: int = 0) -> QuantityEquilibrium:
    return QuantityEquilibrium(0, k_hat, (sentinel_price(instance),), UpdatePolicy(()), 0.0, epsilon, True)


def solve_quantity_based(
    instance: MarketInstance,
    k_cap: int = DEFAULT_K_CAP,
    epsilon_rel: float = DEFAULT_EPSILON_REL,
) -> QuantityEquilibrium:
    if epsilon_rel <= 0:
        raise ValueError("epsilon_rel must be positive")
    epsilon = epsilon_rel * instance.no_update_cost
    if not check_one_update_viability(instance):
        return _degenerate_quantity(instance, epsilon)
    k_hat = threshold_count(instance, k_cap)

    def social(k):
        return _aoi_after(instance, k) + instance.C(k)

    k_star = k_hat + 1 if social(k_hat + 1) < social(k_hat) else k_hat
    if k_star == 0:
        return _degenerate_quantity(instance, epsilon, k_hat)
    prices = quantity_prices(instance, k_star, epsilon)
    profit = instance.no_update_cost - _aoi_after(instance, k_star) - instance.C(k_star)
    return QuantityEquilibrium(
        k_star, k_hat, prices, equal_spaced_policy(instance.horizon, k_star), profit, epsilon
    )


def _scan(instance: MarketInstance, k_cap: int) -> np.ndarray:
    return np.array([_aoi_after(instance, k) + instance.C(k) for k in range(k_cap + 1)])


def social_optimum(instance: MarketInstance, k_cap: int = 1000) -> Tuple[int, UpdatePolicy, float]:
    """Exhaustive count scan of aggregate age cost plus operational cost."""
    costs = _scan(instance, k_cap)
    k = int(np.argmin(costs))
    return k, equal_spaced_policy(instance.horizon, k), float(costs[k])


def profit_upper_bound(instance: MarketInstance, k_cap: int = 1000) -> float:
    """max over K of F(T) - (K+1)F(T/(K+1)) - C(K); K = 0 contributes 0."""
    return float(np.max(instance.no_update_cost - _scan(instance, k_cap)))


def compare_profits(instance: MarketInstance, k_cap: int = DEFAULT_K_CAP,
                    slack_rel: float = 1e-12) -> Tuple[float, float, float]:
    """(time-dependent profit, quantity-based profit, their ratio).

    Raises BoundViolationError unless pi_t <= pi_q < 2*pi_t. When both are zero
    (one update exactly breaks even) the ratio is nan.
    """
    pi_t = solve_time_dependent(instance).profit
    pi_q = solve_quantity_based(instance, k_cap).profit
    slack = slack_rel * instance.no_update_cost
    if pi_t == 0 and pi_q <= slack:
        return pi_t, pi_q, math.nan
    if pi_t > pi_q + slack or pi_q >= 2 * pi_t:
        raise BoundViolationError(f"profit sandwich violated: pi_t={pi_t}, pi_q={pi_q}")
    return pi_t, pi_q, pi_q / pi_t
