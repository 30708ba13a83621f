import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from capgame.curves import (InfeasibleAmountError, MarginalCurve, PowerMargin,
                            UnsupportedCurveError, add_margin)
from oracles import knots_integral


def test_evaluation_examples():
    assert MarginalCurve.constant(75.0, 1.0)(0.3) == 75.0
    e3 = MarginalCurve.from_knots([(0, 10), (10, 0)])
    assert e3(4.0) == pytest.approx(6.0)
    assert math.isinf(MarginalCurve.constant(1.0, 1.0)(1.5))


def test_integral_examples():
    quad = MarginalCurve.from_knots([(0, 0), (100, 200 / 150)])  # marginal of t^2/150
    assert quad.integral(75.0) == pytest.approx(37.5)
    assert quad.integral(0.0) == 0.0
    assert MarginalCurve.from_knots([(0, 10), (10, 0)]).integral(10.0) == pytest.approx(50.0)
    with pytest.raises(InfeasibleAmountError):
        quad.integral(101.0)


def test_inverse_examples():
    c = MarginalCurve.constant(75.0, 1.0)
    assert c.inverse_sup(8 / 15, 75.0) == pytest.approx(8 / 15)
    assert c.inverse_sup(8 / 15, 50.0) == 0.0
    assert c.inverse_inf(8 / 15, 75.0) == 0.0
    lin = MarginalCurve.from_knots([(0, 0), (1, 1)])
    assert lin.inverse_sup(1.0, 0.4) == pytest.approx(0.4)
    with pytest.raises(UnsupportedCurveError):
        MarginalCurve.from_knots([(0, 2), (1, 1)]).inverse_sup(1.0, 1.5)


def test_power_margin_mass():
    pm = PowerMargin(0.7, 1.0, 2.0)
    assert pm.payment(1.0) == pytest.approx(0.7)
    x = np.linspace(0, 1, 200001)
    assert np.trapezoid(pm.density(x), x) == pytest.approx(0.7, abs=1e-8)
    # reservation payment to theta equals int e + margin (constant e = 60, margin 8/3)
    e = MarginalCurve.constant(60.0, 1.0)
    pm = PowerMargin(8 / 3, 0.4, 3.0)
    for t in (0.4, 0.7, 1.0):
        assert e.integral(t) + pm.payment(t) == pytest.approx(60 * t + 8 / 3, abs=1e-12)


def test_add_margin_zero_is_identity():
    e = MarginalCurve.constant(3.0, 1.0)
    out = add_margin(e, MarginalCurve.constant(0.0, 1.0))
    assert out(np.linspace(0, 1, 5)).tolist() == [3.0] * 5


curves = st.lists(st.tuples(st.floats(0.01, 1.0), st.floats(0, 10)), min_size=1, max_size=5).map(
    lambda segs: MarginalCurve(tuple(np.concatenate(([0.0], np.cumsum([s for s, _ in segs]))).tolist()),
                               tuple([segs[0][1]] + [v for _, v in segs])))


@given(curves, st.floats(0, 1))
def test_integral_matches_trapezoid_oracle(c, frac):
    t = frac * c.x_max
    assert c.integral(t) == pytest.approx(knots_integral(c.xs, c.vs, t), rel=1e-9, abs=1e-9)
    assert c.integral_scalar(t) == pytest.approx(float(c.integral(t)), rel=1e-12, abs=1e-12)


@given(curves, st.floats(0, 12), st.floats(0, 1))
def test_inverse_is_generalized(c, p, frac):
    mono = MarginalCurve(c.xs, tuple(np.maximum.accumulate(c.vs).tolist()))
    cap = frac * mono.x_max
    y = mono.inverse_sup(cap, p)
    assert 0.0 <= y <= cap + 1e-12
    if y > 0:
        assert mono(y) <= p + 1e-9
    if y < cap - 1e-9:
        assert mono(y + 1e-7) > p - 1e-9
    assert mono.inverse_inf(cap, p) <= y + 1e-12


@given(st.floats(0.01, 10), st.floats(0.05, 2), st.floats(0.1, 8), st.floats(0, 3))
def test_power_shortfall_complements_payment(m, theta, beta, t):
    pm = PowerMargin(m, theta, beta)
    assert pm.payment(t) + pm.shortfall(t) == pytest.approx(m)
    assert pm.payment_scalar(t) == pytest.approx(float(pm.payment(t)), abs=1e-12)
    if t >= theta:
        assert pm.shortfall(t) == 0.0
