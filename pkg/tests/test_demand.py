import numpy as np
import pytest
from hypothesis import given, strategies as st

from capgame.demand import DemandModel

U = DemandModel.uniform(0.0, 1.0)
TWO = DemandModel.discrete([(50.0, 0.5), (100.0, 0.5)])


def test_survival_examples():
    assert U.survival(0.25) == pytest.approx(0.75)
    assert TWO.survival(60.0) == pytest.approx(0.5)
    assert U.survival(11 / 15) == pytest.approx(4 / 15)


def test_shortfall_examples():
    assert U.expected_shortfall(0.5) == pytest.approx(0.125)
    assert U.expected_shortfall(1.0) == 0.0
    assert U.expected_shortfall(3.0) == 0.0
    assert TWO.expected_shortfall(75.0) == pytest.approx(12.5)
    assert TWO.expected_shortfall(100.0) == 0.0


def test_expected_min_examples():
    assert U.expected_min(1.0) == pytest.approx(0.5)
    assert U.expected_min(0.0) == 0.0
    assert TWO.expected_min(75.0) == pytest.approx(62.5)


def test_scalar_matches_vector():
    for d in (U, TWO, DemandModel.piecewise_cdf([(0, 0), (1, 0.8), (2, 1)])):
        for T in np.linspace(0, 2.5, 11):
            assert d.shortfall_scalar(T) == pytest.approx(float(d.expected_shortfall(T)), abs=1e-12)


def test_validation():
    with pytest.raises(ValueError):
        DemandModel.discrete([(1.0, 0.4), (2.0, 0.4)])
    with pytest.raises(ValueError):
        DemandModel.uniform(1.0, 1.0)
    with pytest.raises(ValueError):
        DemandModel.piecewise_cdf([(0, 0.1), (1, 1)])


def _models():
    uni = st.tuples(st.floats(0, 5), st.floats(0.1, 5)).map(
        lambda a: DemandModel.uniform(a[0], a[0] + a[1]))

    def disc(pts):
        vals = sorted(set(pts))
        w = np.full(len(vals), 1.0 / len(vals))
        return DemandModel.discrete(list(zip(vals, w)))

    dis = st.lists(st.integers(0, 50), min_size=1, max_size=5).map(
        lambda xs: disc([x / 5 for x in xs]))
    return st.one_of(uni, dis)


@given(_models(), st.floats(0, 12))
def test_min_plus_shortfall_is_mean(d, T):
    assert d.expected_min(T) + d.expected_shortfall(T) == pytest.approx(d.mean, abs=1e-9)


@given(_models(), st.floats(0, 12), st.floats(0, 1))
def test_shortfall_is_integral_of_survival(d, T, h):
    # E[(D-T)^+] - E[(D-T-h)^+] = int_T^{T+h} Pr[D > z] dz, checked by quadrature
    z = np.linspace(T, T + h, 4001)
    if d.is_discrete:
        surv = np.array([sum(w for v, w in zip(d.values, d.weights) if v > x) for x in z])
    else:
        surv = np.clip((d.high - z) / (d.high - d.low), 0, 1)
    quad = float(np.trapezoid(surv, z))
    diff = float(d.expected_shortfall(T) - d.expected_shortfall(T + h))
    assert diff == pytest.approx(quad, abs=2e-3 * max(1.0, h))
