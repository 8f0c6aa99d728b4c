import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from freshmarket.cost_models import DomainError, Monomial, PowerLaw, Sampled
from freshmarket.market import (
    MarketInstance,
    OutcomeReport,
    QuantityBased,
    TimeDependent,
    TimeQuantity,
    UpdatePolicy,
    aggregate_aoi_cost,
    aoi_at,
    equal_spaced_policy,
    evaluate_outcome,
    payment,
    removal_cost_increase,
    scheme_from_dict,
    sentinel_price,
)

FIG6_PRICES = [31.25, 5.787, 2.0255]


def test_aoi_at():
    assert aoi_at(UpdatePolicy(()), 7.0, 10.0) == 7
    assert aoi_at(UpdatePolicy((2, 5)), 6.0, 10.0) == 1
    assert aoi_at(UpdatePolicy((2, 5)), 5.0, 10.0) == 0
    with pytest.raises(DomainError):
        aoi_at(UpdatePolicy(()), 11.0, 10.0)


def test_aggregate_examples(fig6, linear30):
    assert aggregate_aoi_cost(linear30, UpdatePolicy(())) == linear30.F(30.0)
    assert aggregate_aoi_cost(linear30, UpdatePolicy((15,))) == 225
    assert aggregate_aoi_cost(fig6, UpdatePolicy((1.25, 2.5, 3.75))) == pytest.approx(4 * 1.25**3 / 3, rel=1e-15)


def test_payment_examples():
    assert payment(QuantityBased((3.0,)), UpdatePolicy(())) == 0
    assert payment(TimeDependent.constant(3.0), UpdatePolicy(())) == 0
    assert payment(QuantityBased(FIG6_PRICES), UpdatePolicy((1, 2, 3))) == pytest.approx(39.0625, rel=1e-15)
    assert payment(TimeDependent.constant(225.0), UpdatePolicy((15,))) == 225


def test_evaluate_examples(fig6, linear30):
    r = evaluate_outcome(linear30, QuantityBased((5.0,)), UpdatePolicy(()))
    assert (r.payment, r.profit) == (0, 0)
    assert r.destination_cost == r.social_cost == linear30.F(30.0)
    r = evaluate_outcome(linear30, TimeDependent.constant(225.0), UpdatePolicy((15,)))
    assert r.profit == 219
    r = evaluate_outcome(fig6, QuantityBased(FIG6_PRICES), UpdatePolicy((1.25, 2.5, 3.75)))
    assert r.profit == pytest.approx(37.5625, rel=1e-14)


def test_policy_validation():
    for bad in [(0.0,), (3.0, 2.0), (1.0, 1.0), (float("nan"),)]:
        with pytest.raises(ValueError):
            UpdatePolicy(bad)
    with pytest.raises(DomainError):
        UpdatePolicy((5.0,)).intervals(5.0)


def test_nearest_grid_lookup_ties_go_earlier():
    s = TimeDependent((1.0, 2.0, 3.0), 1.0)
    assert s.price(0.5, 1) == 1.0
    assert s.price(0.51, 1) == 2.0
    assert s.price(1.5, 1) == 2.0
    assert s.price(99.0, 1) == 3.0
    tq = TimeQuantity(np.array([[1.0, 10.0], [2.0, 20.0]]), 1.0)
    assert tq.price(0.5, 1) == 1.0
    assert tq.price(0.7, 2) == 20.0
    assert tq.price(0.7, 9) == 20.0  # counts past the grid reuse the last column


def test_quantity_tail_rule():
    q = QuantityBased((4.0, 2.0))
    assert [q.price(0, k) for k in (1, 2, 3, 4)] == [4, 2, 2, 2]
    assert q.cumulative(5) == 12


def test_negative_prices_rejected():
    with pytest.raises(ValueError):
        QuantityBased((1.0, -1.0))
    with pytest.raises(ValueError):
        TimeDependent.constant(-2.0)


def test_sentinel_exceeds_any_payment(linear30):
    assert sentinel_price(linear30) == 10 * linear30.F(30.0)


def test_json_round_trip(fig6):
    r = evaluate_outcome(fig6, QuantityBased(FIG6_PRICES), UpdatePolicy((1.25, 2.5, 3.75)))
    d = json.loads(json.dumps(r.to_dict()))
    assert set(d) == {"policy", "payment", "aggregate_aoi_cost", "destination_cost", "profit", "social_cost"}
    assert OutcomeReport.from_dict(d) == r
    assert MarketInstance.from_dict(json.loads(json.dumps(fig6.to_dict()))) == fig6
    for scheme in (QuantityBased((1.0, 2.0)), TimeDependent((1.0, 2.0), 0.5)):
        assert scheme_from_dict(json.loads(json.dumps(scheme.to_dict()))) == scheme


# --- properties -------------------------------------------------------------

@st.composite
def instance_and_policy(draw):
    T = draw(st.floats(1.0, 40.0))
    model = draw(st.one_of(
        st.floats(1.0, 3.0).map(PowerLaw),
        st.just(Sampled((0.0, 10.0, 25.0, 50.0), (0.5, 2.0, 6.0, 20.0))),
    ))
    inst = MarketInstance(T, model, Monomial(draw(st.floats(0.0, 5.0)), draw(st.integers(1, 3))))
    fracs = draw(st.lists(st.floats(0.01, 0.99), min_size=0, max_size=6, unique=True))
    times = sorted({round(f * T, 9) for f in fracs})
    return inst, UpdatePolicy(tuple(times))


@settings(max_examples=40, deadline=None)
@given(instance_and_policy())
def test_interval_identity_against_direct_quadrature(case):
    inst, pol = case
    T = inst.horizon
    direct, _ = integrate.quad(
        lambda t: inst.age_cost.f(aoi_at(pol, t, T)), 0.0, T,
        points=pol.times or None, limit=200, epsrel=1e-10,
    )
    assert aggregate_aoi_cost(inst, pol) == pytest.approx(direct, rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(instance_and_policy(), st.data())
def test_removing_an_update_costs_df(case, data):
    inst, pol = case
    if pol.count == 0:
        return
    k = data.draw(st.integers(1, pol.count))
    without = UpdatePolicy(pol.times[: k - 1] + pol.times[k:])
    increase = aggregate_aoi_cost(inst, without) - aggregate_aoi_cost(inst, pol)
    df = removal_cost_increase(inst, pol, k)
    assert increase == pytest.approx(df, rel=1e-9, abs=1e-12 * inst.F(inst.horizon))


@settings(max_examples=60, deadline=None)
@given(instance_and_policy(), st.lists(st.floats(0.0, 50.0), min_size=1, max_size=5))
def test_outcome_identities(case, prices):
    inst, pol = case
    for scheme in (QuantityBased(tuple(prices)), TimeDependent.from_function(lambda t: prices[0] * t, inst.horizon, 100)):
        r = evaluate_outcome(inst, scheme, pol)
        assert r.destination_cost == r.aggregate_aoi_cost + r.payment
        assert r.profit == r.payment - inst.C(pol.count)
        assert r.social_cost == r.aggregate_aoi_cost + inst.C(pol.count)


@settings(max_examples=60, deadline=None)
@given(instance_and_policy(), st.lists(st.floats(0.0, 50.0), min_size=1, max_size=5))
def test_quantity_payment_ignores_timing(case, prices):
    inst, pol = case
    q = QuantityBased(tuple(prices))
    assert payment(q, pol) == payment(q, equal_spaced_policy(inst.horizon, pol.count))
