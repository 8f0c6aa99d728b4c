import itertools
import math

import numpy as np
import pytest

from freshmarket.certify import interval_spread, resolution_bound
from freshmarket.cost_models import Monomial, PowerLaw, Sampled
from freshmarket.destination import (
    UnboundedResponseError,
    default_k_cap,
    grid_best_response,
    grid_resolution_slack,
    quantity_best_response,
    upsilon,
    upsilon_curve,
)
from freshmarket.market import (
    MarketInstance,
    QuantityBased,
    TimeDependent,
    TimeQuantity,
    UpdatePolicy,
    equal_spaced_policy,
    evaluate_outcome,
    sentinel_price,
)
from freshmarket.pricing import solve_quantity_based

from conftest import random_viable_instances

FIG6_PRICES = [31.25, 5.787, 2.0255]


def test_upsilon_examples(fig6):
    assert upsilon(fig6, [7.0], 0) == fig6.F(5.0)
    assert upsilon(fig6, FIG6_PRICES, 3) == pytest.approx(2.6041666 + 39.0625, rel=1e-7)
    assert upsilon(fig6, FIG6_PRICES, 3) == pytest.approx(fig6.F(5.0), rel=1e-4)
    lin = MarketInstance(30.0, PowerLaw(1), Monomial(6, 3))
    assert upsilon(lin, [10.0, 10.0], 2) == pytest.approx(170.0, rel=1e-15)


def test_upsilon_curve_matches_outcomes():
    for inst in random_viable_instances(5, seed=11):
        prices = QuantityBased(tuple(np.random.default_rng(1).uniform(0, 200, 6)))
        curve = upsilon_curve(inst, prices, 12)
        for k in range(13):
            direct = evaluate_outcome(inst, prices, equal_spaced_policy(inst.horizon, k)).destination_cost
            assert curve[k] == pytest.approx(direct, rel=1e-9)


def test_quantity_response_examples(fig6):
    FT = fig6.F(5.0)
    br = quantity_best_response(fig6, [2 * FT])
    assert br.count == 0 and br.overall_cost == FT
    eq = solve_quantity_based(fig6)
    br = quantity_best_response(fig6, eq.prices)
    assert br.policy.times == pytest.approx((1.25, 2.5, 3.75))
    assert br.overall_cost == pytest.approx(fig6.F(5.0), rel=1e-12)


def test_free_updates_hit_the_cap():
    inst = MarketInstance(30.0, PowerLaw(1), Monomial(6, 3))
    br = quantity_best_response(inst, [0.0], k_cap=50)
    assert br.count == 50 and br.cap_hit
    with pytest.raises(UnboundedResponseError):
        quantity_best_response(inst, [0.0], k_cap=50, strict=True)


def test_grid_response_examples(linear30, fig6):
    br = grid_best_response(linear30, TimeDependent.constant(sentinel_price(linear30)), 200)
    assert br.count == 0
    br = grid_best_response(linear30, TimeDependent.constant(112.5), 600)
    assert br.count == 1 and abs(br.policy.times[0] - 15.0) <= 30 / 600
    eq = solve_quantity_based(fig6)
    br = grid_best_response(fig6, eq.scheme, 500, 10)
    assert br.count == 3
    assert np.allclose(br.policy.times, (1.25, 2.5, 3.75), atol=5 / 500)
    assert abs(br.overall_cost - upsilon(fig6, eq.scheme, 3)) <= 2 * resolution_bound(fig6, 500)


def test_default_cap():
    assert default_k_cap(100) == 32
    assert default_k_cap(500) == 100


# --- brute-force oracle for the dynamic program -----------------------------

def enumerate_costs(inst, scheme, n, k_cap):
    """Minimum destination cost per update count by listing every grid schedule."""
    T = inst.horizon
    pts = [i * T / n for i in range(1, n)]
    best = {}
    for k in range(k_cap + 1):
        costs = [evaluate_outcome(inst, scheme, UpdatePolicy(c)).destination_cost
                 for c in itertools.combinations(pts, k)]
        best[k] = min(costs)
    return best


@pytest.mark.parametrize("seed", range(6))
def test_dp_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    model = PowerLaw(float(rng.uniform(1, 3))) if seed % 2 else Sampled((0, 3, 7, 12), (0.0, 1.0, 4.0, 12.0))
    inst = MarketInstance(10.0, model, Monomial(1.0, 2))
    n, k_cap = 9, 4
    scheme = TimeQuantity(rng.uniform(0, 8, size=(n + 1, k_cap)), inst.horizon / n)
    br = grid_best_response(inst, scheme, n, k_cap)
    brute = enumerate_costs(inst, scheme, n, k_cap)
    for k in range(k_cap + 1):
        assert br.count_costs[k] == pytest.approx(brute[k], rel=1e-12)
    assert br.min_cost == pytest.approx(min(brute.values()), rel=1e-12)
    realized = evaluate_outcome(inst, scheme, br.policy).destination_cost
    assert realized == pytest.approx(br.overall_cost, rel=1e-9)


def test_lexicographically_earliest_schedule():
    # linear f, T=4, n=4: two updates split 4 steps as (1,1,2), (1,2,1) or (2,1,1),
    # all with age cost 3; the earliest schedule is (1, 2)
    inst = MarketInstance(4.0, PowerLaw(1), Monomial(0.0, 1))
    scheme = QuantityBased((5.0, 0.5, 1e6))
    br = grid_best_response(inst, scheme, 4, 2)
    assert br.policy.times == (1.0, 2.0)
    assert br.overall_cost == 8.5


# --- properties -------------------------------------------------------------

def random_quantity_prices(inst, rng, length=6):
    ks = np.arange(1, length + 1)
    T = inst.horizon
    saving = ks * inst.F(T / ks) - (ks + 1) * inst.F(T / (ks + 1))
    return QuantityBased(tuple(saving * rng.uniform(0.3, 1.5, length)))


@pytest.mark.parametrize("inst", random_viable_instances(8, seed=21), ids=lambda i: f"k{i.age_cost.kappa:.2f}")
def test_oracle_agrees_with_analytic(inst):
    rng = np.random.default_rng(int(inst.age_cost.kappa * 1e6))
    n = 500
    for _ in range(3):
        prices = random_quantity_prices(inst, rng)
        analytic = quantity_best_response(inst, prices, k_cap=100)
        oracle = grid_best_response(inst, prices, n, 100)
        assert oracle.count == analytic.count
        assert abs(oracle.overall_cost - analytic.overall_cost) <= inst.horizon / n * inst.age_cost.f(inst.horizon)
        assert interval_spread(oracle.policy, inst.horizon) <= 2 * inst.horizon / n + 1e-12


@pytest.mark.parametrize("seed", range(4))
def test_refining_grid_never_raises_optimum(seed):
    rng = np.random.default_rng(seed)
    inst = random_viable_instances(1, seed=100 + seed)[0]
    scheme = TimeQuantity(rng.uniform(0, inst.F(inst.horizon) / 4, size=(21, 5)), inst.horizon / 20)
    coarse = grid_best_response(inst, scheme, 120, 20)
    fine = grid_best_response(inst, scheme, 240, 20)
    assert fine.min_cost <= coarse.min_cost * (1 + 1e-12)


def test_resolution_slack_bounds_actual_snapping_error():
    for inst in random_viable_instances(10, seed=5, degrees=(1, 2, 3)):
        n = 337  # awkward grid, never aligned with even spacing
        for k in (1, 2, 5, 9):
            zero = QuantityBased((0.0,))
            grid_cost = grid_best_response(inst, QuantityBased((0.0,) * k + (1e12,)), n, k).count_costs[k]
            cont = upsilon(inst, zero, k)
            assert 0 <= grid_cost - cont <= grid_resolution_slack(inst, n, k) + 1e-12 * cont
