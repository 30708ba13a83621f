"""Supply chain profit: evaluation and maximization over supplier subsets.

The chain problem for a subset ``S`` picks reservations ``t`` (zero outside
``S``) maximizing expected sales revenue minus execution and reservation
costs, with execution dispatched in merit order of marginal cost.

With constant marginal execution costs and non-decreasing marginal
reservation costs the objective is laminar concave in ``t`` (the screening
curve form), and :func:`solve_chain` maximizes it exactly by exchange ascent.
Anything else goes to a multi-start grid search whose result is labelled as
not certified.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import merit
from .curves import MarginalCurve, UnsupportedCurveError
from .demand import DemandModel
from .optimize import default_starts, exchange_ascent, grid_search

SCREENING_EXACT = "screening-exact"
GRID = "grid"
GENERAL_GRID = "general-grid"

MAX_SUPPLIERS = 20


class SizeLimitError(ValueError):
    """Too many suppliers for subset enumeration."""


@dataclass(frozen=True)
class Supplier:
    name: str
    exec_cost: MarginalCurve
    res_cost: MarginalCurve
    capacity: float | None = None


@dataclass(frozen=True)
class Scenario:
    rho: float
    demand: DemandModel
    suppliers: tuple[Supplier, ...]

    def __post_init__(self):
        object.__setattr__(self, "suppliers", tuple(self.suppliers))
        if not self.rho > 0 or not math.isfinite(self.rho):
            raise ValueError("retail price must be positive and finite")
        if not self.suppliers:
            raise ValueError("scenario needs at least one supplier")
        names = [s.name for s in self.suppliers]
        if len(set(names)) != len(names):
            raise ValueError("supplier names must be unique")
        for s in self.suppliers:
            if s.capacity is not None and s.capacity <= 0:
                raise ValueError(f"capacity of {s.name} must be positive")

    @property
    def n(self) -> int:
        return len(self.suppliers)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.suppliers]

    @property
    def d_bar(self) -> float:
        return self.demand.high

    @property
    def exec_curves(self) -> list[MarginalCurve]:
        return [s.exec_cost for s in self.suppliers]

    @property
    def res_curves(self) -> list[MarginalCurve]:
        return [s.res_cost for s in self.suppliers]

    @property
    def caps(self) -> np.ndarray:
        """Largest reservation allowed from each supplier."""
        out = []
        for s in self.suppliers:
            cap = self.d_bar if s.capacity is None else min(s.capacity, self.d_bar)
            out.append(min(cap, s.exec_cost.x_max, s.res_cost.x_max))
        return np.array(out)

    def index(self, name: str) -> int:
        return self.names.index(name)

    @property
    def constant_exec(self) -> bool:
        return all(c.is_constant for c in self.exec_curves)


@dataclass(frozen=True)
class ChainSolution:
    subset: frozenset
    t: np.ndarray = field(compare=False)
    value: float
    solver: str
    tolerance: float

    @property
    def support(self) -> frozenset:
        return frozenset(int(i) for i in np.flatnonzero(self.t > 0))

    @property
    def certified(self) -> bool:
        return self.solver == SCREENING_EXACT


@dataclass
class ChainTable:
    """Optimal chain solution for every supplier subset."""

    names: list[str]
    solutions: dict
    tau: float = 1e-5

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def full(self) -> frozenset:
        return frozenset(range(self.n))

    def __getitem__(self, S) -> ChainSolution:
        return self.solutions[frozenset(S)]

    def value(self, S) -> float:
        return self.solutions[frozenset(S)].value

    def subsets(self):
        return subsets_in_order(self.n)

    @property
    def complete(self) -> bool:
        return all(S in self.solutions for S in self.subsets())


def subsets_in_order(n: int):
    """All subsets of ``range(n)`` ordered by size, then lexicographically."""
    return [frozenset(c) for k in range(n + 1) for c in itertools.combinations(range(n), k)]


def _check_t(scenario: Scenario, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.shape != (scenario.n,):
        raise ValueError(f"reservation vector must have length {scenario.n}")
    if np.any(t < 0) or np.any(t > scenario.caps * (1 + 1e-12) + 1e-15):
        raise ValueError("reservation outside the allowed domain")
    return np.minimum(t, scenario.caps)


def merit_order_position(scenario: Scenario, i: int, x, t):
    """Cumulative quantity dispatched, chain-wide, when unit ``x`` of ``i`` is used."""
    return merit.merit_position(scenario.exec_curves, np.asarray(t, dtype=float), i, x)


def chain_profit(scenario: Scenario, t) -> float:
    """Expected chain profit at reservations ``t`` with merit-order dispatch."""
    t = _check_t(scenario, t)
    order = scenario.exec_curves
    total = 0.0
    for i, s in enumerate(scenario.suppliers):
        if t[i] <= 0:
            continue
        total += merit.unit_usage(scenario.demand, scenario.rho, order, t, i,
                                  (scenario.rho, ((-1.0, s.exec_cost),)))
        total -= s.res_cost.integral(t[i])
    return total


def chain_value_batch(scenario: Scenario, T, idx=None) -> np.ndarray:
    """Chain profit for each row of ``T``; columns are the suppliers in ``idx``."""
    idx = list(range(scenario.n)) if idx is None else list(idx)
    T = np.atleast_2d(np.asarray(T, dtype=float))
    curves = [scenario.suppliers[i].exec_cost for i in idx]
    out = merit.dispatch_value(scenario.demand, scenario.rho, curves, T)
    for col, i in enumerate(idx):
        out = out - scenario.suppliers[i].res_cost.integral(T[:, col])
    return out


class _Screening:
    """Screening-curve chain objective on a subset with constant execution costs.

    Suppliers are taken in merit order ``c_(1) <= ... <= c_(m) < rho`` (index
    tie-break); with cumulative reservations ``T_k`` the expected dispatch
    value is ``(rho - c_(1)) E[D] - sum_k (c_(k+1) - c_(k)) E[(D - T_k)^+]
    - (rho - c_(m)) E[(D - T_m)^+]``.
    """

    def __init__(self, demand: DemandModel, rho: float, levels: Sequence[float],
                 res_curves: Sequence[MarginalCurve]):
        self.demand = demand
        self.mean = demand.mean
        order = sorted((lv, k) for k, lv in enumerate(levels) if lv < rho)
        self.order = [k for _, k in order]
        lv = [levels[k] for k in self.order]
        self.gaps = [b - a for a, b in zip(lv[:-1], lv[1:])] + ([rho - lv[-1]] if lv else [])
        self.top = rho - lv[0] if lv else 0.0
        self.res = list(res_curves)

    def dispatch_value(self, t) -> float:
        if not self.order:
            return 0.0
        sf = self.demand.shortfall_scalar
        total = self.top * self.mean
        T = 0.0
        for k, gap in zip(self.order, self.gaps):
            T += t[k]
            total -= gap * sf(T)
        return total

    def batch_dispatch_value(self, T) -> np.ndarray:
        T = np.atleast_2d(np.asarray(T, dtype=float))
        out = np.full(T.shape[0], self.top * self.mean)
        if not self.order:
            return np.zeros(T.shape[0])
        cum = np.cumsum(T[:, self.order], axis=1)
        return out - self.demand.expected_shortfall(cum) @ np.asarray(self.gaps)

    def __call__(self, t) -> float:
        return self.dispatch_value(t) - sum(e.integral_scalar(x) for e, x in zip(self.res, t))

    def batch(self, T) -> np.ndarray:
        T = np.atleast_2d(np.asarray(T, dtype=float))
        out = self.batch_dispatch_value(T)
        for k, e in enumerate(self.res):
            out = out - e.integral(T[:, k])
        return out


def screening_objective(scenario: Scenario, t) -> float:
    """Chain profit via the screening-curve decomposition (constant ``c_i`` only)."""
    if not scenario.constant_exec:
        raise UnsupportedCurveError("screening objective needs constant execution costs")
    t = _check_t(scenario, t)
    levels = [c.knot_v[0] for c in scenario.exec_curves]
    obj = _Screening(scenario.demand, scenario.rho, levels, scenario.res_curves)
    return obj.dispatch_value(t) - sum(e.integral(x) for e, x in zip(scenario.res_curves, t))


def _is_exact_case(scenario: Scenario, idx) -> bool:
    sup = [scenario.suppliers[i] for i in idx]
    return all(s.exec_cost.is_constant and s.res_cost.is_nondecreasing for s in sup)


def solve_chain(scenario: Scenario, S, start=None, extra_starts=(), grid_points: int = 200,
                refinements: int = 2, n_starts: int = 8) -> ChainSolution:
    """Maximize chain profit with reservations restricted to ``S``.

    ``start`` (full-length vector) seeds the exact ascent; ``extra_starts``
    are added to the grid solver's deterministic starts.
    """
    S = frozenset(int(i) for i in S)
    n = scenario.n
    if not S <= set(range(n)):
        raise ValueError("subset refers to unknown suppliers")
    idx = sorted(S)
    t = np.zeros(n)
    d_bar = scenario.d_bar
    if not idx:
        return ChainSolution(S, t, 0.0, SCREENING_EXACT, 0.0)
    caps = scenario.caps[idx]
    lower = np.zeros(len(idx))
    if _is_exact_case(scenario, idx):
        levels = [scenario.suppliers[i].exec_cost.knot_v[0] for i in idx]
        obj = _Screening(scenario.demand, scenario.rho, levels,
                         [scenario.suppliers[i].res_cost for i in idx])
        x0 = lower if start is None else np.asarray(start, dtype=float)[idx]
        x, fx, _ = exchange_ascent(obj, x0, lower, caps, tol_x=1e-9 * d_bar, tol_f=1e-10)
        t[idx] = x
        return ChainSolution(S, t, float(fx), SCREENING_EXACT, 1e-9 * d_bar)
    starts = default_starts(lower, caps, n_starts)
    starts += [np.asarray(s, dtype=float)[idx] for s in extra_starts]
    if start is not None:
        starts.append(np.asarray(start, dtype=float)[idx])
    if all(scenario.suppliers[i].exec_cost.is_constant for i in idx):
        levels = [scenario.suppliers[i].exec_cost.knot_v[0] for i in idx]
        fb = _Screening(scenario.demand, scenario.rho, levels,
                        [scenario.suppliers[i].res_cost for i in idx]).batch
    else:
        fb = lambda rows: chain_value_batch(scenario, rows, idx)
    x, fx, res = grid_search(fb, lower, caps,
                             points=grid_points, refinements=refinements, starts=starts)
    t[idx] = x
    return ChainSolution(S, t, float(fx), GRID, res)


def solve_chain_table(scenario: Scenario, tau: float = 1e-5, **kwargs) -> ChainTable:
    """Solve every subset, smallest first.

    Grid solves of ``S`` also start from the solutions of each ``S - {k}``,
    which keeps the computed set function monotone.  Results depend only on
    the scenario, never on evaluation order.
    """
    if scenario.n > MAX_SUPPLIERS:
        raise SizeLimitError(f"subset enumeration limited to {MAX_SUPPLIERS} suppliers")
    sols = {}
    for S in subsets_in_order(scenario.n):
        seeds = [sols[S - {k}].t for k in sorted(S)]
        sols[S] = solve_chain(scenario, S, extra_starts=seeds, **kwargs)
    return ChainTable(scenario.names, sols, tau)


# -- general capacity games ---------------------------------------------------

@dataclass(frozen=True)
class GeneralGame:
    """Capacity game with caller-supplied revenue and cost functions.

    Evaluation functions are vectorized over leading axes:

    * ``revenue(D, s)`` with ``s`` of shape ``(..., n)`` returns shape ``(...)``;
    * ``exec_cost(s)`` and ``res_cost(t)`` return per-supplier costs, shape ``(..., n)``.

    ``capacity_sets[i]`` is either ``("interval", hi)`` for ``[0, hi]`` or a
    tuple of allowed values containing 0.  ``dispatch_candidates(t, D)``
    (rows ``(B, n)`` -> ``(B, m, n)``) lists the second-stage choices searched
    for each demand value; the default is every greedy fill of demand over an
    ordered subset of suppliers, i.e. the vertices of ``{0 <= s <= t,
    sum s <= D}``.
    """

    names: tuple[str, ...]
    capacity_sets: tuple
    demand: DemandModel
    revenue: Callable
    exec_cost: Callable
    res_cost: Callable
    dispatch_candidates: Callable | None = None

    @property
    def n(self) -> int:
        return len(self.names)

    def axis(self, i: int, resolution: int) -> np.ndarray:
        spec = self.capacity_sets[i]
        if isinstance(spec, tuple) and len(spec) == 2 and spec[0] == "interval":
            return np.linspace(0.0, float(spec[1]), resolution + 1)
        vals = np.unique(np.asarray(spec, dtype=float))
        if vals[0] != 0.0:
            raise ValueError("finite capacity sets must contain 0")
        return vals

    def candidates(self, t: np.ndarray, D: float) -> np.ndarray:
        if self.dispatch_candidates is not None:
            return self.dispatch_candidates(t, D)
        n = t.shape[1]
        seqs = [p for k in range(n + 1) for c in itertools.combinations(range(n), k)
                for p in itertools.permutations(c)]
        out = np.zeros((t.shape[0], len(seqs), n))
        for m, seq in enumerate(seqs):
            left = np.full(t.shape[0], float(D))
            for i in seq:
                take = np.minimum(t[:, i], left)
                out[:, m, i] = take
                left = left - take
        return out

    def profit(self, t) -> np.ndarray:
        """Chain profit of each reservation row with optimal second-stage choices."""
        t = np.atleast_2d(np.asarray(t, dtype=float))
        total = -self.res_cost(t).sum(axis=-1)
        for D, p in zip(self.demand.values, self.demand.weights):
            s = self.candidates(t, D)
            val = self.revenue(D, s) - self.exec_cost(s).sum(axis=-1)
            total = total + p * val.max(axis=1)
        return total


def solve_general(game: GeneralGame, S, resolution: int = 400, max_points: int = 2_000_000,
                  chunk: int = 20_000) -> ChainSolution:
    """Maximize a general game's chain profit over the capacity lattice.

    Exhaustive when the lattice has at most ``max_points`` points, otherwise
    multi-start coordinate scans over the same lattice.
    """
    if not game.demand.is_discrete:
        raise UnsupportedCurveError("general games need discrete demand")
    S = frozenset(int(i) for i in S)
    axes = [game.axis(i, resolution) if i in S else np.zeros(1) for i in range(game.n)]
    step = max((float(np.max(np.diff(a))) for a in axes if a.size > 1), default=0.0)
    size = math.prod(a.size for a in axes)
    if size <= max_points:
        best_t, best_v = None, -math.inf
        grids = np.meshgrid(*axes, indexing="ij")
        flat = np.column_stack([g.ravel() for g in grids])
        for lo in range(0, flat.shape[0], chunk):
            rows = flat[lo:lo + chunk]
            vals = game.profit(rows)
            j = int(np.argmax(vals))
            if vals[j] > best_v:
                best_t, best_v = rows[j].copy(), float(vals[j])
        return ChainSolution(S, best_t, best_v, GENERAL_GRID, step)
    best_t, best_v = None, -math.inf
    lower = np.array([a[0] for a in axes])
    upper = np.array([a[-1] for a in axes])
    from .optimize import _coordinate_scans
    for s0 in default_starts(lower, upper):
        x = np.array([a[np.argmin(np.abs(a - v))] for a, v in zip(axes, s0)])
        fx = float(game.profit(x[None])[0])
        x, fx = _coordinate_scans(game.profit, x, fx, [lambda v, a=a: a for a in axes], 1e-12)
        if fx > best_v:
            best_t, best_v = x, fx
    return ChainSolution(S, best_t, best_v, GENERAL_GRID, step)


def solve_general_table(game: GeneralGame, tau: float = 1e-5, **kwargs) -> ChainTable:
    sols = {S: solve_general(game, S, **kwargs) for S in subsets_in_order(game.n)}
    return ChainTable(list(game.names), sols, tau)
