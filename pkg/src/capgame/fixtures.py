"""Worked examples and random instance generators.

The named scenarios reproduce the small examples used throughout the tests:

* ``table1``: three suppliers with constant costs, uniform demand on [0, 1];
* ``ms``: two suppliers, one cheap to reserve and one cheap to execute;
* ``example4``: deterministic demand, two capacity-limited free suppliers and
  one with decreasing marginal reservation cost (submodularity fails);
* ``example1``: a general game with a shared fixed reservation discount and
  buyer-side fixed costs per supplier used.
"""
from __future__ import annotations

import numpy as np

from .chain import GeneralGame, Scenario, Supplier
from .curves import MarginalCurve
from .demand import DemandModel


def _const(name, c, e, x_max=1.0, capacity=None):
    return Supplier(name, MarginalCurve.constant(c, x_max), MarginalCurve.constant(e, x_max), capacity)


def table1() -> Scenario:
    return Scenario(10.0, DemandModel.uniform(0.0, 1.0),
                    [_const("s1", 1.0, 3.0), _const("s2", 2.5, 2.0), _const("s3", 5.0, 1.0)])


def ms() -> Scenario:
    return Scenario(100.0, DemandModel.uniform(0.0, 1.0),
                    [_const("s1", 0.0, 60.0), _const("s2", 75.0, 5.0)])


def example4() -> Scenario:
    five = MarginalCurve.constant(0.0, 5.0)
    ten = MarginalCurve.constant(0.0, 10.0)
    return Scenario(20.0, DemandModel.discrete([(10.0, 1.0)]), [
        Supplier("s1", five, five),
        Supplier("s2", five, five),
        Supplier("s3", ten, MarginalCurve.from_knots([(0.0, 10.0), (10.0, 0.0)])),
    ])


def _chi(x):
    return (np.asarray(x) > 0).astype(float)


def example1() -> GeneralGame:
    """Two symmetric suppliers; demand 50 or 100 with equal probability.

    Reservation cost ``t^2/150 + 20 - 10 chi(t_other)`` when ``t > 0``, unit
    execution cost 1, revenue ``3 min(D, s1 + s2)`` less 20 per supplier used.
    """

    def revenue(D, s):
        return 3.0 * np.minimum(D, s.sum(axis=-1)) - 20.0 * _chi(s).sum(axis=-1)

    def exec_cost(s):
        return np.asarray(s, dtype=float)

    def res_cost(t):
        t = np.asarray(t, dtype=float)
        other = _chi(t[..., ::-1])
        return _chi(t) * (t * t / 150.0 + 20.0 - 10.0 * other)

    return GeneralGame(("s1", "s2"), (("interval", 100.0), ("interval", 100.0)),
                       DemandModel.discrete([(50.0, 0.5), (100.0, 0.5)]),
                       revenue, exec_cost, res_cost)


def example4_general() -> GeneralGame:
    """:func:`example4` expressed through the general-game interface."""

    def revenue(D, s):
        return 20.0 * np.minimum(D, s.sum(axis=-1))

    def exec_cost(s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def res_cost(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        out[..., 2] = 10.0 * t[..., 2] - 0.5 * t[..., 2] ** 2
        return out

    return GeneralGame(("s1", "s2", "s3"),
                       (("interval", 5.0), ("interval", 5.0), ("interval", 10.0)),
                       DemandModel.discrete([(10.0, 1.0)]), revenue, exec_cost, res_cost)


SCENARIOS = {"table1": table1, "ms": ms, "example4": example4}
GAMES = {"example1": example1, "example4": example4_general}


# -- random instances ---------------------------------------------------------

def random_demand(rng, d_bar: float = 1.0) -> DemandModel:
    if rng.random() < 0.5:
        return DemandModel.uniform(0.0, d_bar)
    k = int(rng.integers(2, 5))
    vals = np.sort(rng.choice(np.arange(1, 21), size=k, replace=False)) / 20.0 * d_bar
    w = rng.dirichlet(np.ones(k))
    w[-1] = 1.0 - w[:-1].sum()
    return DemandModel.discrete(list(zip(vals.tolist(), w.tolist())))


def random_increasing_curve(rng, x_max: float, level: float, segments: int | None = None):
    """Non-decreasing piecewise-linear curve starting in ``[0, level]``."""
    segments = int(rng.integers(1, 4)) if segments is None else segments
    xs = np.concatenate(([0.0], np.sort(rng.uniform(0, x_max, segments - 1)), [x_max]))
    xs = np.unique(xs)
    vs = rng.uniform(0, level) + np.concatenate(([0.0], np.cumsum(rng.uniform(0, level, xs.size - 1))))
    return MarginalCurve(tuple(xs.tolist()), tuple(vs.tolist()))


def random_curve(rng, x_max: float, level: float, segments: int | None = None):
    """Non-negative piecewise-linear curve of any shape."""
    segments = int(rng.integers(1, 4)) if segments is None else segments
    xs = np.unique(np.concatenate(([0.0], np.sort(rng.uniform(0, x_max, segments - 1)), [x_max])))
    return MarginalCurve(tuple(xs.tolist()), tuple(rng.uniform(0, level, xs.size).tolist()))


def random_screening_scenario(rng, n: int, rho: float = 10.0, d_bar: float = 1.0) -> Scenario:
    """Constant execution costs and non-decreasing reservation marginals."""
    sup = []
    for k in range(n):
        c = float(rng.uniform(0, 0.8 * rho))
        sup.append(Supplier(f"s{k + 1}", MarginalCurve.constant(c, d_bar),
                            random_increasing_curve(rng, d_bar, 0.15 * rho)))
    return Scenario(rho, random_demand(rng, d_bar), sup)


def random_two_supplier_scenario(rng, rho: float = 10.0, d_bar: float = 1.0) -> Scenario:
    """Two suppliers with non-decreasing execution and arbitrary reservation marginals."""
    sup = []
    for k in range(2):
        sup.append(Supplier(f"s{k + 1}", random_increasing_curve(rng, d_bar, 0.3 * rho),
                            random_curve(rng, d_bar, 0.3 * rho)))
    return Scenario(rho, random_demand(rng, d_bar), sup)
