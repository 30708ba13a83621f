"""The buyer's reservation problem under supply-function bids.

Given bids ``(p_i, r_i)`` plus an optional lump-sum fee or power margin per
supplier, the buyer reserves ``t``, observes demand, and dispatches reserved
capacity in merit order of execution price.  Lump sums make the problem
combinatorial in the support of ``t``, so :func:`solve_buyer` enumerates the
supports of fee-charging suppliers and solves a continuous problem for each.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import merit
from .chain import MAX_SUPPLIERS, Scenario, SizeLimitError, _Screening, subsets_in_order
from .curves import MarginalCurve, PowerMargin, UnsupportedCurveError
from .optimize import default_starts, exchange_ascent, grid_search

TAU_TIE = 1e-7
EXACT = "screening-exact"
GRID = "grid"


@dataclass(frozen=True)
class Bid:
    """Execution price ``p``, reservation price ``r`` and an optional fee.

    The reservation payment for ``t`` is ``int_0^t r`` plus ``lump_sum`` when
    ``t > 0`` plus the power margin's payment.  At most one of the two fee
    forms may be set.
    """

    exec_price: MarginalCurve
    res_price: MarginalCurve
    lump_sum: float = 0.0
    power: PowerMargin | None = None

    def __post_init__(self):
        if not self.exec_price.is_nondecreasing:
            raise UnsupportedCurveError("execution price curves must be non-decreasing")
        if self.lump_sum < 0 or not math.isfinite(self.lump_sum):
            raise ValueError("lump sum must be finite and >= 0")
        if self.lump_sum > 0 and self.power is not None:
            raise ValueError("a bid carries either a lump sum or a power margin, not both")

    @classmethod
    def at_cost(cls, supplier, lump_sum: float = 0.0, power: PowerMargin | None = None) -> "Bid":
        return cls(supplier.exec_cost, supplier.res_cost, lump_sum, power)

    @classmethod
    def constant(cls, p: float, r: float, x_max: float, lump_sum: float = 0.0) -> "Bid":
        return cls(MarginalCurve.constant(p, x_max), MarginalCurve.constant(r, x_max), lump_sum)

    @property
    def x_max(self) -> float:
        return min(self.exec_price.x_max, self.res_price.x_max)

    def payment(self, t):
        """Total reservation payment for amount ``t``."""
        t = np.asarray(t, dtype=float)
        out = self.res_price.integral(t) + self.lump_sum * (t > 0)
        if self.power is not None:
            out = out + self.power.payment(t)
        return out if np.ndim(out) else float(out)

    def smooth_payment(self, t):
        """Reservation payment without the lump sum (continuous in ``t``)."""
        t = np.asarray(t, dtype=float)
        out = self.res_price.integral(t)
        if self.power is not None:
            out = out + self.power.payment(t)
        return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class BidProfile:
    scenario: Scenario
    bids: tuple
    preferred: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "bids", tuple(self.bids))
        object.__setattr__(self, "preferred", frozenset(self.preferred))
        if len(self.bids) != self.scenario.n:
            raise ValueError("need exactly one bid per supplier")
        if self.scenario.n > MAX_SUPPLIERS:
            raise SizeLimitError(f"buyer support enumeration limited to {MAX_SUPPLIERS} suppliers")

    @classmethod
    def at_cost(cls, scenario: Scenario, lump_sums=None) -> "BidProfile":
        lump_sums = [0.0] * scenario.n if lump_sums is None else lump_sums
        return cls(scenario, [Bid.at_cost(s, k) for s, k in zip(scenario.suppliers, lump_sums)])

    @property
    def n(self) -> int:
        return self.scenario.n

    @property
    def prices(self) -> list:
        return [b.exec_price for b in self.bids]

    @property
    def caps(self) -> np.ndarray:
        return np.minimum(self.scenario.caps, [b.x_max for b in self.bids])

    def with_bid(self, i: int, bid: Bid) -> "BidProfile":
        bids = list(self.bids)
        bids[i] = bid
        return replace(self, bids=tuple(bids))


def preferred_status(profile: BidProfile, i: int, flag: bool = True) -> BidProfile:
    """Profile in which exact buyer ties break towards supports containing ``i``."""
    pref = profile.preferred | {i} if flag else profile.preferred - {i}
    return replace(profile, preferred=frozenset(pref))


def _check_t(profile: BidProfile, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.shape != (profile.n,):
        raise ValueError(f"reservation vector must have length {profile.n}")
    caps = profile.caps
    if np.any(t < 0) or np.any(t > caps * (1 + 1e-12) + 1e-15):
        raise ValueError("reservation outside the bid domains")
    return np.minimum(t, caps)


def dispatch(profile: BidProfile, t, D: float) -> np.ndarray:
    """Cost-minimal execution amounts for demand ``D`` (merit order of bid prices)."""
    t = _check_t(profile, t)
    return merit.dispatch(profile.prices, t, D, profile.scenario.rho)


def buyer_profit(profile: BidProfile, t) -> float:
    """Expected buyer profit at reservations ``t``, fees included."""
    t = _check_t(profile, t)
    sc = profile.scenario
    total = 0.0
    for i, b in enumerate(profile.bids):
        if t[i] <= 0:
            continue
        total += merit.unit_usage(sc.demand, sc.rho, profile.prices, t, i,
                                  (sc.rho, ((-1.0, b.exec_price),)))
        total -= b.payment(t[i])
    return total


def supplier_profits(profile: BidProfile, t) -> np.ndarray:
    """Expected profit of each supplier at buyer reservations ``t``."""
    t = _check_t(profile, t)
    sc = profile.scenario
    out = np.zeros(profile.n)
    for i, (b, s) in enumerate(zip(profile.bids, sc.suppliers)):
        if t[i] <= 0:
            continue
        out[i] = merit.unit_usage(sc.demand, sc.rho, profile.prices, t, i,
                                  (0.0, ((1.0, b.exec_price), (-1.0, s.exec_cost))))
        out[i] += b.payment(t[i]) - s.res_cost.integral(t[i])
    return out


def buyer_profit_batch(profile: BidProfile, T) -> np.ndarray:
    """:func:`buyer_profit` for each row of ``T`` via the price-space integral."""
    T = np.atleast_2d(np.asarray(T, dtype=float))
    sc = profile.scenario
    out = merit.dispatch_value(sc.demand, sc.rho, profile.prices, T)
    for i, b in enumerate(profile.bids):
        out = out - b.payment(T[:, i])
    return out


def chain_profit_under_bids(profile: BidProfile, t) -> float:
    """Chain profit at ``t`` when execution follows the bids' merit order.

    Equals buyer profit plus the suppliers' profits; it coincides with the
    cost-ordered chain profit whenever bid prices rank suppliers like costs.
    """
    t = _check_t(profile, t)
    sc = profile.scenario
    total = 0.0
    for i, s in enumerate(sc.suppliers):
        if t[i] <= 0:
            continue
        total += merit.unit_usage(sc.demand, sc.rho, profile.prices, t, i,
                                  (sc.rho, ((-1.0, s.exec_cost),)))
        total -= s.res_cost.integral(t[i])
    return total


@dataclass
class BuyerSolution:
    profile: BidProfile = field(repr=False)
    t: np.ndarray
    profit: float
    chain_profit: float
    solver: str
    ties: int = 1  # candidate supports within the tie tolerance
    note: str = ""

    @property
    def support(self) -> frozenset:
        return frozenset(int(i) for i in np.flatnonzero(self.t > 0))

    def dispatch(self, D: float) -> np.ndarray:
        return dispatch(self.profile, self.t, D)

    def supplier_profits(self) -> np.ndarray:
        return supplier_profits(self.profile, self.t)


# continuous sub-problem cache: results depend only on the curves involved
_CACHE: dict = {}
_CACHE_MAX = 20_000


def clear_cache():
    _CACHE.clear()


def _at_cost(profile: BidProfile, S) -> bool:
    sup = profile.scenario.suppliers
    return all(profile.bids[i].power is None and profile.bids[i].exec_price == sup[i].exec_cost
               and profile.bids[i].res_price == sup[i].res_cost for i in S)


def _continuous(profile: BidProfile, S, starts=(), grid_points: int = 200):
    """Maximize buyer profit without lump sums over ``t`` supported in ``S``.

    Exact exchange ascent when the bids form a screening problem (constant
    execution prices, non-decreasing reservation prices, no power margins);
    multi-start grid search otherwise.  Returns ``(candidates, solver)``
    where ``candidates`` lists reservation vectors, the best first.  In grid
    mode the local optimum reached from every start is included, as are the
    start points themselves, so that tied optima reach the tie-break.
    """
    sc = profile.scenario
    idx = sorted(S)
    n = profile.n
    key = (n, sc.rho, sc.demand, tuple((i, profile.bids[i].exec_price, profile.bids[i].res_price,
                                        profile.bids[i].power, float(profile.caps[i])) for i in idx),
           tuple(np.asarray(s, dtype=float)[idx].tobytes() for s in starts), grid_points)
    hit = _CACHE.get(key)
    if hit is not None:
        return [t.copy() for t in hit[0]], hit[1]
    if not idx:
        out = ([np.zeros(n)], EXACT)
    else:
        bids = [profile.bids[i] for i in idx]
        caps = profile.caps[idx]
        lower = np.zeros(len(idx))
        const_p = all(b.exec_price.is_constant for b in bids)
        if const_p:
            scr = _Screening(sc.demand, sc.rho, [b.exec_price.knot_v[0] for b in bids],
                             [b.res_price for b in bids])
        if const_p and all(b.res_price.is_nondecreasing and b.power is None for b in bids):
            x, _, _ = exchange_ascent(scr, lower, lower, caps, tol_x=1e-9 * sc.d_bar, tol_f=1e-10)
            out = ([_embed(n, idx, x)], EXACT)
        else:
            powers = [(k, b.power) for k, b in enumerate(bids) if b.power is not None]

            def fb(rows):
                if const_p:
                    v = scr.batch_dispatch_value(rows)
                else:
                    v = merit.dispatch_value(sc.demand, sc.rho, [b.exec_price for b in bids], rows)
                for k, b in enumerate(bids):
                    v = v - b.res_price.integral(rows[:, k])
                for k, pm in powers:
                    v = v - pm.payment(rows[:, k])
                return v

            fs = None
            if const_p:
                def fs(x):
                    v = scr.dispatch_value(x)
                    for k, b in enumerate(bids):
                        v -= b.res_price.integral_scalar(x[k])
                    for k, pm in powers:
                        v -= pm.payment_scalar(x[k])
                    return v

            given = [np.clip(np.asarray(s, dtype=float)[idx], lower, caps) for s in starts]
            st = default_starts(lower, caps, 4) + given
            found, _, _ = grid_search(fb, lower, caps, points=grid_points, starts=st,
                                      return_all=True, fs=fs)
            xs = [x for x, _ in found] + given
            out = ([_embed(n, idx, x) for x in xs], GRID)
    if len(_CACHE) > _CACHE_MAX:
        _CACHE.clear()
    _CACHE[key] = ([t.copy() for t in out[0]], out[1])
    return out


def _embed(n, idx, x):
    t = np.zeros(n)
    t[idx] = x
    return t


def solve_buyer(profile: BidProfile, allowed=None, tau_tie: float = TAU_TIE, starts=(),
                hint=None, grid_points: int = 200) -> BuyerSolution:
    """Buyer-optimal reservations, restricted to suppliers in ``allowed``.

    Supports of the suppliers charging a margin (lump sum or power form) are
    enumerated; at-cost suppliers are always available.  Enumerating power
    margins too, although their payment is continuous at 0, exposes the
    reservation plans that tie for the buyer so the tie-break can see them.
    Solutions within ``tau_tie`` of the best buyer profit are ranked by chain
    profit (with true costs, also within ``tau_tie``), then by the number of
    preferred suppliers used, then by support size, then lexicographically.
    ``starts`` are extra start points for the non-exact continuous solver;
    ``hint`` (a chain table of the same scenario) adds ``t*_S`` for each
    enumerated support ``S``, and is used as the answer outright when every
    bid in ``S`` is at cost apart from a lump sum.
    """
    n = profile.n
    allowed = frozenset(range(n)) if allowed is None else frozenset(allowed)
    sc = profile.scenario
    free = frozenset(i for i in allowed
                     if profile.bids[i].lump_sum <= 0 and profile.bids[i].power is None)
    fee = sorted(allowed - free)
    snap = 1e-9 * sc.d_bar
    cands = {}
    solvers = set()
    for F in subsets_in_order(len(fee)):
        S = free | {fee[k] for k in F}
        st = list(starts)
        if hint is not None and _at_cost(profile, S):
            # at-cost bids without fees: the continuous part is the chain problem
            sol = hint[S]
            ts, solver = [sol.t.copy()], sol.solver
        else:
            if hint is not None:
                st += [hint[S].t, hint[hint.full].t]
            ts, solver = _continuous(profile, S, st, grid_points)
        solvers.add(solver)
        for t in ts:
            t = np.where(t > snap, t, 0.0)
            key = (frozenset(np.flatnonzero(t > 0).tolist()), np.round(t / snap).tobytes())
            if key not in cands:
                cands[key] = t
    keys = list(cands)
    vals = buyer_profit_batch(profile, np.array([cands[k] for k in keys]))
    cands = {k: (cands[k], float(v)) for k, v in zip(keys, vals)}
    best = max(v for _, v in cands.values())
    near = {k: tv for k, tv in cands.items() if tv[1] >= best - tau_tie}
    note = ""
    if len(near) > 1:
        chain = {k: chain_profit_under_bids(profile, tv[0]) for k, tv in near.items()}
        top = max(chain.values())
        near = {k: tv for k, tv in near.items() if chain[k] >= top - tau_tie}
        note = f"{len(cands)} candidate plans compared; buyer tie resolved by chain profit"
        if len(near) > 1:
            note = "buyer and chain tie resolved by preferred status, support size, then order"
    # among equal plans prefer preferred suppliers, larger supports, lower indices, higher profit
    pick = min(near, key=lambda k: (-len(k[0] & profile.preferred), -len(k[0]), sorted(k[0]),
                                    -near[k][1]))
    t, v = near[pick]
    solver = EXACT if solvers == {EXACT} else GRID
    return BuyerSolution(profile, t, v, chain_profit_under_bids(profile, t), solver,
                         len(near), note)
