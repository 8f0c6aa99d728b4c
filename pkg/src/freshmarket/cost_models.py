"""Age-cost and operational-cost families.

An age-cost model gives the destination's instantaneous cost ``f(delta)`` of
holding data that is ``delta`` time units old, together with its running
integral ``F``. An operational-cost model gives the source's cost ``C(K)`` of
producing ``K`` updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .quadrature import adaptive_simpson

QUAD_REL_TOL = 1e-10


class DomainError(ValueError):
    """Argument outside the domain of a cost function."""


class ExtrapolationError(DomainError):
    """Evaluation point beyond the support of a tabulated model."""


@dataclass(frozen=True)
class PowerLaw:
    kappa: float

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and self.kappa >= 1.0):
            raise ValueError(f"kappa must be >= 1, got {self.kappa}")

    def f(self, delta):
        return np.power(delta, self.kappa) if isinstance(delta, np.ndarray) else delta**self.kappa

    def F(self, x):
        k1 = self.kappa + 1.0
        if isinstance(x, np.ndarray):
            return np.power(x, k1) / k1
        return x**k1 / k1

    def max_delta(self) -> float:
        return math.inf

    def to_dict(self) -> dict:
        return {"power_law": {"kappa": self.kappa}}


def Linear() -> PowerLaw:
    return PowerLaw(1.0)


@dataclass(frozen=True)
class Sampled:
    """Piecewise-linear age cost through ``(grid[i], values[i])``.

    The grid must start at 0. Values must be non-negative, non-decreasing and
    convex (slopes non-decreasing); violations are rejected, not repaired.
    """

    grid: tuple
    values: tuple

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2:
            raise ValueError("grid and values must be 1-d of equal length >= 2")
        if g[0] != 0.0:
            raise ValueError("sampled grid must start at 0")
        if np.any(np.diff(g) <= 0):
            raise ValueError("sampled grid must be strictly increasing")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("sampled values must be finite and non-negative")
        slopes = np.diff(v) / np.diff(g)
        scale = max(1.0, float(np.max(np.abs(slopes))))
        if np.any(slopes < -1e-12 * scale):
            raise ValueError("sampled age cost must be non-decreasing")
        if np.any(np.diff(slopes) < -1e-9 * scale):
            raise ValueError("sampled age cost must be convex")
        object.__setattr__(self, "grid", tuple(float(x) for x in g))
        object.__setattr__(self, "values", tuple(float(x) for x in v))

    def max_delta(self) -> float:
        return self.grid[-1]

    def _check(self, x):
        top = np.max(x) if isinstance(x, np.ndarray) else x
        if top > self.grid[-1] * (1 + 1e-12):
            raise ExtrapolationError(f"{top} beyond sampled grid end {self.grid[-1]}")

    def f(self, delta):
        self._check(delta)
        out = np.interp(delta, self.grid, self.values)
        return out if isinstance(delta, np.ndarray) else float(out)

    def _F_scalar(self, x: float) -> float:
        x = min(float(x), self.grid[-1])
        return adaptive_simpson(self.f, 0.0, x, rel_tol=QUAD_REL_TOL, breakpoints=self.grid)

    def F(self, x):
        self._check(x)
        if isinstance(x, np.ndarray):
            return np.vectorize(self._F_scalar, otypes=[float])(x)
        return self._F_scalar(x)

    def to_dict(self) -> dict:
        return {"sampled": {"grid": list(self.grid), "values": list(self.values)}}


AgeCostModel = Union[PowerLaw, Sampled]


@dataclass(frozen=True)
class Monomial:
    c: float
    d: int

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c >= 0):
            raise ValueError(f"cost coefficient must be >= 0, got {self.c}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"degree must be an integer >= 1, got {self.d}")
        object.__setattr__(self, "d", int(self.d))

    def C(self, k):
        return self.c * k**self.d

    def dC(self, k):
        return self.c * self.d * k ** (self.d - 1)

    def to_dict(self) -> dict:
        return {"monomial": {"c": self.c, "d": self.d}}


@dataclass(frozen=True)
class PolynomialCoefficients:
    """``C(K) = sum(coeffs[i] * K**i)``; ``coeffs[0]`` must be zero."""

    coeffs: tuple

    def __post_init__(self):
        co = tuple(float(a) for a in self.coeffs)
        if len(co) < 2:
            raise ValueError("need at least a linear coefficient")
        if co[0] != 0.0:
            raise ValueError("constant term must be zero so that C(0) = 0")
        if any(not math.isfinite(a) or a < 0 for a in co):
            raise ValueError("coefficients must be finite and non-negative")
        object.__setattr__(self, "coeffs", co)

    def C(self, k):
        return sum(a * k**i for i, a in enumerate(self.coeffs) if i > 0)

    def dC(self, k):
        return sum(i * a * k ** (i - 1) for i, a in enumerate(self.coeffs) if i > 0)

    def to_dict(self) -> dict:
        return {"polynomial": {"coeffs": list(self.coeffs)}}


OperationalCostModel = Union[Monomial, PolynomialCoefficients]


def _negative(x) -> bool:
    return bool(np.any(np.asarray(x) < 0))


def age_cost(model: AgeCostModel, delta: float) -> float:
    if _negative(delta):
        raise DomainError(f"negative age {delta}")
    return model.f(delta)


def cumulative_age_cost(model: AgeCostModel, x: float) -> float:
    """F(x), the integral of f over [0, x]."""
    if _negative(x):
        raise DomainError(f"negative interval {x}")
    return model.F(x)


def differential_age_cost(model: AgeCostModel, x: float, y: float) -> float:
    """Extra aggregate age cost caused by merging an interval ``y`` into a following ``x``.

    Always evaluated as F(x + y) - F(y) - F(x) so that telescoping identities
    between F values hold to rounding.
    """
    if x < 0 or y < 0:
        raise DomainError(f"negative interval ({x}, {y})")
    return model.F(x + y) - model.F(y) - model.F(x)


def operational_cost(model: OperationalCostModel, k: int) -> float:
    if k < 0 or int(k) != k:
        raise DomainError(f"update count must be a non-negative integer, got {k}")
    return model.C(int(k))


def marginal_operational_cost(model: OperationalCostModel, k: float) -> float:
    if k < 0:
        raise DomainError(f"negative count {k}")
    return model.dC(k)


def check_one_update_viability(instance) -> bool:
    """True when a single update is worth at least its operational cost."""
    half = instance.horizon / 2.0
    return operational_cost(instance.op_cost, 1) <= differential_age_cost(
        instance.age_cost, half, half
    )


def age_cost_from_dict(spec: dict) -> AgeCostModel:
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValueError("age_cost must be an object with exactly one variant key")
    (kind, params), = spec.items()
    if kind == "power_law":
        _only(params, {"kappa"})
        return PowerLaw(float(params["kappa"]))
    if kind == "linear":
        _only(params or {}, set())
        return Linear()
    if kind == "sampled":
        _only(params, {"grid", "values"})
        return Sampled(tuple(params["grid"]), tuple(params["values"]))
    raise ValueError(f"unknown age_cost variant {kind!r}")


def op_cost_from_dict(spec: dict) -> OperationalCostModel:
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValueError("op_cost must be an object with exactly one variant key")
    (kind, params), = spec.items()
    if kind == "monomial":
        _only(params, {"c", "d"})
        return Monomial(float(params["c"]), params["d"])
    if kind == "polynomial":
        _only(params, {"coeffs"})
        return PolynomialCoefficients(tuple(params["coeffs"]))
    raise ValueError(f"unknown op_cost variant {kind!r}")


def _only(params: dict, allowed: set) -> None:
    if not isinstance(params, dict):
        raise ValueError("model parameters must be an object")
    extra = set(params) - allowed
    missing = allowed - set(params)
    if extra:
        raise ValueError(f"unknown fields {sorted(extra)}")
    if missing:
        raise ValueError(f"missing fields {sorted(missing)}")
