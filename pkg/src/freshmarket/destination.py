"""Destination (follower) best responses.

Two routes to the same problem: a closed form for quantity-based prices, where
the optimal schedule spaces updates evenly and only the count is searched, and
a brute-force dynamic program over a uniform time grid that accepts any
price rule and serves as the independent oracle.

Both routes treat near-indifference the same way. The destination picks an
update count whose cost is within tolerance of its optimum; among such counts
it takes the one most profitable for the source, then the smaller count.
Equilibrium price schedules leave the destination exactly indifferent between
buying the equilibrium bundle and buying nothing, so this source-favoring
convention is what makes those schedules well defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .market import (
    MarketInstance,
    PricingScheme,
    QuantityBased,
    UpdatePolicy,
    equal_spaced_policy,
    payment,
)

# Υ values are sums of a handful of terms of size <= F(T); rounding stays far below this.
FLOAT_TIE_REL = 1e-12
DEFAULT_QUANTITY_K_CAP = 1000


class UnboundedResponseError(RuntimeError):
    """Destination cost still falling at the count cap."""


@dataclass(frozen=True)
class BestResponse:
    policy: UpdatePolicy
    overall_cost: float
    optimizer_kind: str
    grid_points: Optional[int] = None
    max_count: Optional[int] = None
    min_cost: float = math.nan
    cap_hit: bool = False
    count_costs: tuple = field(default=(), repr=False)

    @property
    def count(self) -> int:
        return self.policy.count

    def to_dict(self) -> dict:
        kind: dict = {"analytic": {}} if self.optimizer_kind == "analytic" else {
            "grid_oracle": {"grid_points": self.grid_points, "max_count": self.max_count}
        }
        return {
            "policy": self.policy.to_dict(),
            "overall_cost": self.overall_cost,
            "optimizer_kind": kind,
            "min_cost": self.min_cost,
            "cap_hit": self.cap_hit,
        }


def _as_quantity(prices) -> QuantityBased:
    return prices if isinstance(prices, QuantityBased) else QuantityBased(tuple(prices))


def upsilon(instance: MarketInstance, prices: Union[QuantityBased, Sequence[float]], k: int) -> float:
    """Destination's overall cost with k evenly spaced updates."""
    q = _as_quantity(prices)
    T = instance.horizon
    return (k + 1) * instance.F(T / (k + 1)) + q.cumulative(k)


def upsilon_curve(instance: MarketInstance, prices, k_cap: int) -> np.ndarray:
    """Υ(K') for K' = 0..k_cap."""
    q = _as_quantity(prices)
    ks = np.arange(k_cap + 1)
    T = instance.horizon
    aoi = (ks + 1) * instance.F(T / (ks + 1.0))
    pay = np.array([q.cumulative(int(k)) for k in ks])
    return aoi + pay


def _pick_count(costs: np.ndarray, slack: np.ndarray, profits, scale: float) -> int:
    """Index of the source-favoring count among near-optimal ones."""
    best = float(np.min(costs))
    tol = FLOAT_TIE_REL * scale
    admitted = [k for k in range(len(costs)) if costs[k] - slack[k] <= best + tol]
    # max() keeps the first maximum, i.e. the fewest updates
    return max(admitted, key=lambda k: (profits(k), -k))


def quantity_best_response(
    instance: MarketInstance,
    prices,
    k_cap: int = DEFAULT_QUANTITY_K_CAP,
    strict: bool = False,
) -> BestResponse:
    """Closed-form response to quantity-based prices.

    Updates are evenly spaced at k*T/(K*+1). ``cap_hit`` is set when the
    cost is still strictly decreasing at ``k_cap``; with ``strict`` that
    raises UnboundedResponseError instead.
    """
    q = _as_quantity(prices)
    ups = upsilon_curve(instance, q, k_cap)
    k_star = _pick_count(
        ups,
        np.zeros_like(ups),
        lambda k: q.cumulative(k) - instance.C(k),
        instance.no_update_cost,
    )
    cap_hit = k_star == k_cap and k_cap > 0 and ups[k_cap] < ups[k_cap - 1]
    if cap_hit and strict:
        raise UnboundedResponseError(
            f"destination cost still decreasing at K_cap={k_cap}; prices fall too fast"
        )
    return BestResponse(
        policy=equal_spaced_policy(instance.horizon, k_star),
        overall_cost=float(ups[k_star]),
        optimizer_kind="analytic",
        max_count=k_cap,
        min_cost=float(np.min(ups)),
        cap_hit=bool(cap_hit),
        count_costs=tuple(ups.tolist()),
    )


def default_k_cap(n: int) -> int:
    return max(32, math.ceil(2 * n / 10))


def grid_resolution_slack(instance: MarketInstance, n: int, k: int) -> float:
    """Upper bound on how much restricting k evenly spaced updates to the grid
    {iT/n} can raise their aggregate age cost.

    Snapping moves each interval u = T/(k+1) by some e with |e| <= h = T/n.
    The first-order terms f(u)e cancel because the intervals still sum to T,
    and convexity bounds each remainder by (h/2)(f(u+h) - f(u)).
    """
    if k == 0:
        return 0.0
    T = instance.horizon
    h = T / n
    u = T / (k + 1)
    f = instance.age_cost.f
    return (k + 1) * 0.5 * h * (f(min(u + h, T)) - f(u))


class _GridProblem:
    def __init__(self, instance: MarketInstance, scheme: PricingScheme, n: int, k_cap: int):
        self.instance = instance
        self.scheme = scheme
        self.n = n
        self.k_cap = k_cap
        self.h = instance.horizon / n
        self.t = np.arange(n + 1) * self.h
        self.t[-1] = instance.horizon
        self.Fd = np.asarray(instance.F(self.t), dtype=float)
        d = np.arange(n + 1)[None, :] - np.arange(n + 1)[:, None]
        self.Fmat = np.where(d > 0, self.Fd[np.clip(d, 0, n)], np.inf)
        self._prices = {}

    def prices(self, k: int) -> np.ndarray:
        # price of the k-th update at each grid point; endpoints are not allowed
        if k not in self._prices:
            p = np.asarray(self.scheme.price_vector(self.t, k), dtype=float).copy()
            p[0] = p[-1] = np.inf
            self._prices[k] = p
        return self._prices[k]

    def count_costs(self) -> np.ndarray:
        """Minimum overall cost using exactly k updates, k = 0..k_cap."""
        n = self.n
        out = np.full(self.k_cap + 1, np.inf)
        out[0] = self.Fd[n]
        prev = np.full(n + 1, np.inf)
        prev[0] = 0.0
        tail = self.Fd[::-1]  # F(T - t_j)
        for k in range(1, self.k_cap + 1):
            cur = np.min(prev[:, None] + self.Fmat, axis=0) + self.prices(k)
            out[k] = np.min(cur + tail)
            if not np.isfinite(out[k]):
                break
            prev = cur
        return out

    def policy(self, K: int) -> UpdatePolicy:
        """Lexicographically earliest optimal schedule with exactly K updates."""
        n = self.n
        if K == 0:
            return UpdatePolicy(())
        togo = [None] * (K + 1)
        togo[K] = self.Fd[::-1].copy()
        for k in range(K - 1, -1, -1):
            nxt = self.prices(k + 1) + togo[k + 1]
            togo[k] = np.min(self.Fmat + nxt[None, :], axis=1)
        scale = max(1.0, abs(float(togo[0][0])))
        tol = FLOAT_TIE_REL * scale
        i, idx = 0, []
        for k in range(K):
            step = self.Fmat[i] + self.prices(k + 1) + togo[k + 1]
            j = int(np.flatnonzero(step <= togo[k][i] + tol)[0])
            idx.append(j)
            i = j
        return UpdatePolicy(tuple(float(self.t[j]) for j in idx))


def grid_best_response(
    instance: MarketInstance,
    scheme: PricingScheme,
    n: int,
    k_cap: Optional[int] = None,
) -> BestResponse:
    """Exact optimum of the destination problem with update times on {iT/n}.

    Dynamic program over (last update index, count). The destination takes
    any count whose best grid schedule is within the grid-resolution slack of
    the optimum; among those it picks the one most profitable for the source,
    then the fewest updates, then the lexicographically earliest times.
    """
    if n < 2:
        raise ValueError("grid needs at least 2 points")
    if k_cap is None:
        k_cap = default_k_cap(n)
    if k_cap < 0:
        raise ValueError("k_cap must be non-negative")
    k_cap = min(k_cap, n - 1)
    prob = _GridProblem(instance, scheme, n, k_cap)
    costs = prob.count_costs()
    slack = np.array([grid_resolution_slack(instance, n, k) for k in range(k_cap + 1)])
    policies: dict = {}

    def profit(k: int) -> float:
        policies[k] = prob.policy(k)
        return payment(scheme, policies[k]) - instance.C(k)

    k_best = _pick_count(costs, slack, profit, instance.no_update_cost)
    pol = policies[k_best]
    return BestResponse(
        policy=pol,
        overall_cost=float(costs[k_best]),
        optimizer_kind="grid_oracle",
        grid_points=n,
        max_count=k_cap,
        min_cost=float(np.min(costs)),
        cap_hit=bool(k_best == k_cap and k_cap > 0),
        count_costs=tuple(costs.tolist()),
    )
