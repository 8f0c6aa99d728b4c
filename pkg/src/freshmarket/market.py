"""Market instances, update policies, pricing schemes and outcome accounting."""

from __future__ import annotations

import bisect
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .cost_models import (
    AgeCostModel,
    DomainError,
    OperationalCostModel,
    age_cost_from_dict,
    cumulative_age_cost,
    differential_age_cost,
    op_cost_from_dict,
    operational_cost,
)

DEFAULT_PRICE_STEPS = 10_000
SENTINEL_FACTOR = 10.0


@dataclass(frozen=True)
class MarketInstance:
    horizon: float
    age_cost: AgeCostModel
    op_cost: OperationalCostModel

    def __post_init__(self):
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.age_cost.max_delta() < self.horizon:
            raise ValueError("age-cost model does not cover the horizon")

    def F(self, x):
        return cumulative_age_cost(self.age_cost, x)

    def C(self, k: int) -> float:
        return operational_cost(self.op_cost, k)

    @property
    def no_update_cost(self) -> float:
        return self.F(self.horizon)

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "age_cost": self.age_cost.to_dict(),
            "op_cost": self.op_cost.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MarketInstance":
        return cls(float(d["horizon"]), age_cost_from_dict(d["age_cost"]), op_cost_from_dict(d["op_cost"]))


def sentinel_price(instance: MarketInstance) -> float:
    """A price no destination will ever pay: total payment never exceeds F(T)."""
    return SENTINEL_FACTOR * instance.no_update_cost


@dataclass(frozen=True)
class UpdatePolicy:
    times: tuple = ()

    def __post_init__(self):
        ts = tuple(float(t) for t in self.times)
        if any(not math.isfinite(t) for t in ts):
            raise ValueError("update times must be finite")
        if ts and ts[0] <= 0:
            raise ValueError("updates must happen strictly after t=0")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("update times must be strictly increasing")
        object.__setattr__(self, "times", ts)

    @property
    def count(self) -> int:
        return len(self.times)

    def intervals(self, horizon: float) -> np.ndarray:
        """Interarrival intervals x_1..x_{K+1}, with S_0 = 0 and S_{K+1} = T."""
        if self.times and self.times[-1] >= horizon:
            raise DomainError(f"update at {self.times[-1]} not before horizon {horizon}")
        edges = np.concatenate(([0.0], self.times, [horizon]))
        return np.diff(edges)

    def to_dict(self) -> dict:
        return {"times": list(self.times)}

    @classmethod
    def from_dict(cls, d: dict) -> "UpdatePolicy":
        return cls(tuple(d["times"]))


def equal_spaced_policy(horizon: float, k: int) -> UpdatePolicy:
    return UpdatePolicy(tuple(j * horizon / (k + 1) for j in range(1, k + 1)))


def _nearest_index(t, step: float, size: int):
    # halfway points go to the earlier grid point
    idx = np.ceil(np.asarray(t, dtype=float) / step - 0.5).astype(int)
    return np.clip(idx, 0, size - 1)


@dataclass(frozen=True)
class TimeDependent:
    """Price depending only on request time: a constant, or samples every ``step``."""

    prices: tuple
    step: Optional[float] = None

    def __post_init__(self):
        ps = tuple(float(p) for p in np.atleast_1d(self.prices))
        _check_prices(ps)
        if len(ps) > 1 and not (self.step and self.step > 0):
            raise ValueError("a sampled time-dependent price needs a positive step")
        object.__setattr__(self, "prices", ps)

    @classmethod
    def constant(cls, price: float) -> "TimeDependent":
        return cls((price,))

    @classmethod
    def from_function(cls, fn, horizon: float, steps: int = DEFAULT_PRICE_STEPS) -> "TimeDependent":
        h = horizon / steps
        return cls(tuple(fn(i * h) for i in range(steps + 1)), h)

    def price(self, t: float, k: int) -> float:
        if len(self.prices) == 1:
            return self.prices[0]
        return self.prices[int(_nearest_index(t, self.step, len(self.prices)))]

    def price_vector(self, times: np.ndarray, k: int) -> np.ndarray:
        if len(self.prices) == 1:
            return np.full(len(times), self.prices[0])
        return np.asarray(self.prices)[_nearest_index(times, self.step, len(self.prices))]

    def to_dict(self) -> dict:
        return {"time_dependent": {"prices": list(self.prices), "step": self.step}}


@dataclass(frozen=True)
class QuantityBased:
    """Price of the k-th update; counts past the list reuse the last price."""

    prices: tuple

    def __post_init__(self):
        ps = tuple(float(p) for p in self.prices)
        if not ps:
            raise ValueError("quantity price list is empty")
        _check_prices(ps)
        object.__setattr__(self, "prices", ps)

    def price(self, t: float, k: int) -> float:
        return self.prices[min(k, len(self.prices)) - 1]

    def price_vector(self, times: np.ndarray, k: int) -> np.ndarray:
        return np.full(len(times), self.price(0.0, k))

    def cumulative(self, k: int) -> float:
        """Total payment for k updates."""
        n = len(self.prices)
        if k <= n:
            return math.fsum(self.prices[:k])
        return math.fsum(self.prices) + (k - n) * self.prices[-1]

    def to_dict(self) -> dict:
        return {"quantity_based": {"prices": list(self.prices)}}


@dataclass(frozen=True, eq=False)
class TimeQuantity:
    """Price grid indexed by (time point i*step, count 1..K_max)."""

    grid: np.ndarray
    step: float

    def __post_init__(self):
        g = np.array(self.grid, dtype=float)
        if g.ndim != 2 or g.shape[0] < 1 or g.shape[1] < 1:
            raise ValueError("time-quantity grid must be a non-empty matrix")
        _check_prices(g.ravel())
        if g.shape[0] > 1 and not (self.step and self.step > 0):
            raise ValueError("time-quantity grid needs a positive step")
        g.setflags(write=False)
        object.__setattr__(self, "grid", g)

    def _col(self, k: int) -> int:
        return min(k, self.grid.shape[1]) - 1

    def price(self, t: float, k: int) -> float:
        return float(self.grid[int(_nearest_index(t, self.step, self.grid.shape[0])), self._col(k)])

    def price_vector(self, times: np.ndarray, k: int) -> np.ndarray:
        return self.grid[_nearest_index(times, self.step, self.grid.shape[0]), self._col(k)]

    def to_dict(self) -> dict:
        return {"time_quantity": {"grid": self.grid.tolist(), "step": self.step}}


PricingScheme = Union[TimeDependent, QuantityBased, TimeQuantity]


def _check_prices(ps) -> None:
    arr = np.asarray(ps, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("prices must be finite and non-negative")


def scheme_from_dict(d: dict) -> PricingScheme:
    (kind, params), = d.items()
    if kind == "time_dependent":
        return TimeDependent(tuple(params["prices"]), params.get("step"))
    if kind == "quantity_based":
        return QuantityBased(tuple(params["prices"]))
    if kind == "time_quantity":
        return TimeQuantity(np.asarray(params["grid"], dtype=float), params["step"])
    raise ValueError(f"unknown pricing scheme {kind!r}")


@dataclass(frozen=True)
class OutcomeReport:
    policy: UpdatePolicy
    payment: float
    aggregate_aoi_cost: float
    destination_cost: float
    profit: float
    social_cost: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["policy"] = self.policy.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OutcomeReport":
        return cls(UpdatePolicy.from_dict(d["policy"]), *(float(d[k]) for k in
                   ("payment", "aggregate_aoi_cost", "destination_cost", "profit", "social_cost")))


def aoi_at(policy: UpdatePolicy, t: float, horizon: float) -> float:
    """Age of the freshest update received by time t (updates at t count)."""
    if not 0 <= t <= horizon:
        raise DomainError(f"t={t} outside [0, {horizon}]")
    i = bisect.bisect_right(policy.times, t)
    return t - (policy.times[i - 1] if i else 0.0)


def aggregate_aoi_cost(instance: MarketInstance, policy: UpdatePolicy) -> float:
    xs = policy.intervals(instance.horizon)
    return math.fsum(instance.F(float(x)) for x in xs)


def payment(scheme: PricingScheme, policy: UpdatePolicy) -> float:
    return math.fsum(scheme.price(t, k) for k, t in enumerate(policy.times, start=1))


def evaluate_outcome(
    instance: MarketInstance, scheme: PricingScheme, policy: UpdatePolicy
) -> OutcomeReport:
    pay = payment(scheme, policy)
    gamma = aggregate_aoi_cost(instance, policy)
    op = instance.C(policy.count)
    return OutcomeReport(
        policy=policy,
        payment=pay,
        aggregate_aoi_cost=gamma,
        destination_cost=gamma + pay,
        profit=pay - op,
        social_cost=gamma + op,
    )


def removal_cost_increase(instance: MarketInstance, policy: UpdatePolicy, k: int) -> float:
    """Aggregate age-cost increase from dropping the k-th update (1-based)."""
    xs = policy.intervals(instance.horizon)
    return differential_age_cost(instance.age_cost, float(xs[k]), float(xs[k - 1]))
