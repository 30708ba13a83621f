import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from capgame import fixtures
from capgame.buyer import (Bid, BidProfile, buyer_profit, chain_profit_under_bids, dispatch,
                           preferred_status, solve_buyer, supplier_profits)
from capgame.chain import Scenario, Supplier, chain_profit
from capgame.curves import MarginalCurve
from capgame.demand import DemandModel


def ms_equilibrium():
    return BidProfile.at_cost(fixtures.ms(), [8 / 3, 8 / 3])


def ms_deviation(p=50.0):
    sc = fixtures.ms()
    b1 = Bid.constant(p, 60 - 55 * p / 75, 1.0)
    b2 = Bid.at_cost(sc.suppliers[1], 32 * (75 - p) / (9 * (100 - p)))
    return BidProfile(sc, [b1, b2])


def test_dispatch_ms():
    prof = ms_equilibrium()
    t = [4 / 15, 8 / 15]
    assert np.allclose(dispatch(prof, t, 0.5), [4 / 15, 7 / 30])
    assert np.allclose(dispatch(prof, t, 0.0), 0)
    assert np.allclose(dispatch(prof, t, 2.0), t)


def test_buyer_profit_examples():
    ms = BidProfile.at_cost(fixtures.ms())
    assert buyer_profit(ms, [0.4, 0.0]) == pytest.approx(8.0)
    assert buyer_profit(ms, [0.0, 0.0]) == 0.0
    t1 = BidProfile.at_cost(fixtures.table1())
    assert buyer_profit(t1, [1 / 3, 4 / 15, 0.2]) == pytest.approx(2.1333, abs=1e-4)
    assert solve_buyer(t1).profit == pytest.approx(2.1333, abs=1e-4)


def test_ms_equilibrium_buyer():
    sol = solve_buyer(ms_equilibrium())
    assert np.allclose(sol.t, [4 / 15, 8 / 15], atol=1e-6)
    assert sol.profit == pytest.approx(16 / 3, abs=1e-6)
    assert np.allclose(sol.supplier_profits(), [8 / 3, 8 / 3], atol=1e-6)


def test_ms_deviation_tie_break():
    prof = ms_deviation()
    sol = solve_buyer(prof)
    # indifferent between using supplier 2 or not; chain profit decides
    assert solve_buyer(prof, allowed={0}).profit == pytest.approx(sol.profit, abs=1e-7)
    assert np.allclose(sol.t, [4 / 15, 8 / 15], atol=1e-5)
    assert sol.supplier_profits()[1] == pytest.approx(16 / 9, abs=1e-6)


def test_prohibitive_bids():
    sc = fixtures.table1()
    prof = BidProfile(sc, [Bid.constant(sc.rho, 1.0, 1.0) for _ in range(3)])
    sol = solve_buyer(prof)
    assert np.all(sol.t == 0) and sol.profit == 0.0


def _twins(fee_a, fee_b):
    a = Supplier("a", MarginalCurve.constant(1.0, 1.0), MarginalCurve.constant(2.0, 1.0))
    b = Supplier("b", MarginalCurve.constant(1.0, 1.0), MarginalCurve.constant(2.0, 1.0))
    sc = Scenario(10.0, DemandModel.uniform(0, 1), [a, b])
    return BidProfile.at_cost(sc, [fee_a, fee_b])


def test_preferred_breaks_ties():
    prof = _twins(0.5, 0.5)
    assert solve_buyer(preferred_status(prof, 0)).support == frozenset({0})
    assert solve_buyer(preferred_status(prof, 1)).support == frozenset({1})
    base = solve_buyer(prof)
    assert base.profit == pytest.approx(solve_buyer(preferred_status(prof, 1)).profit)


def test_preference_never_overrides_profit():
    prof = preferred_status(_twins(0.5, 0.6), 1)
    assert solve_buyer(prof).support == frozenset({0})


def test_allowed_restriction():
    sol = solve_buyer(ms_equilibrium(), allowed={1})
    assert sol.t[0] == 0.0


def _random_profile(rng):
    sc = fixtures.random_screening_scenario(rng, int(rng.integers(2, 4)))
    bids = []
    for s in sc.suppliers:
        kind = rng.integers(3)
        if kind == 0:
            bids.append(Bid.at_cost(s))
        elif kind == 1:
            bids.append(Bid.at_cost(s, float(rng.uniform(0, 0.5))))
        else:
            bids.append(Bid(s.exec_cost.shifted(float(rng.uniform(0, 1))),
                            s.res_cost.shifted(float(rng.uniform(0, 1)))))
    return BidProfile(sc, bids)


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_profit_accounting(seed):
    rng = np.random.default_rng(seed)
    prof = _random_profile(rng)
    t = rng.uniform(0, 1, prof.n) * prof.caps
    # dispatch follows bid prices, so the split adds up to the chain profit under that dispatch
    total = buyer_profit(prof, t) + supplier_profits(prof, t).sum()
    assert total == pytest.approx(chain_profit_under_bids(prof, t), abs=1e-9)
    assert total <= chain_profit(prof.scenario, t) + 1e-9


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_solution_beats_random_plans(seed):
    rng = np.random.default_rng(seed)
    prof = _random_profile(rng)
    sol = solve_buyer(prof)
    assert sol.profit == pytest.approx(buyer_profit(prof, sol.t), abs=1e-9)
    assert sol.chain_profit == pytest.approx(chain_profit_under_bids(prof, sol.t), abs=1e-9)
    for _ in range(20):
        t = rng.uniform(0, 1, prof.n) * prof.caps * (rng.random(prof.n) < 0.7)
        assert buyer_profit(prof, t) <= sol.profit + 1e-7


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_at_cost_buyer_is_chain(seed):
    rng = np.random.default_rng(seed)
    sc = fixtures.random_screening_scenario(rng, 3)
    prof = BidProfile.at_cost(sc)
    t = rng.uniform(0, 1, 3) * sc.caps
    assert buyer_profit(prof, t) == pytest.approx(chain_profit(sc, t), abs=1e-9)
    assert np.allclose(supplier_profits(prof, t), 0.0, atol=1e-9)
