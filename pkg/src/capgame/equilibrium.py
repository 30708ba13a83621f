"""Best responses, equilibrium bid construction and numerical verification.

Against fixed bids of the others, supplier ``i`` can earn at most
``Z_i = Pi*_B(N) - Pi*_B(N - i)``, the buyer's optimal profits with ``i``
offering at cost and without ``i``.  When the chain set function is
submodular, at-cost bids plus a margin ``m_i = Pi*_C(N) - Pi*_C(N - i)``
(as a lump sum, or spread over ``[0, theta_i)`` by a power function) form an
equilibrium in which each supplier earns its marginal contribution.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .buyer import Bid, BidProfile, solve_buyer, preferred_status
from .chain import ChainTable, Scenario, _Screening, chain_value_batch, subsets_in_order
from .curves import PowerMargin
from .optimize import default_starts, grid_search
from .setfunc import check_submodular, contributing_set, marginal_contributions

log = logging.getLogger(__name__)

EPS_VERIFY = 1e-6
TAU = 1e-5
BETA_START = 2.0
BETA_CAP = 2.0 ** 20
LUMP = "lump-sum"
POWER = "power"


class PreconditionError(ValueError):
    """Inputs violate a precondition of the construction."""


class SubmodularityError(PreconditionError):
    pass


def _others_at_cost(profile: BidProfile, i: int) -> BidProfile:
    return profile.with_bid(i, Bid.at_cost(profile.scenario.suppliers[i]))


def best_response_value(profile: BidProfile, i: int, table: ChainTable | None = None) -> float:
    """Supremum of supplier ``i``'s profit against the other bids in ``profile``."""
    Bi = _others_at_cost(profile, i)
    n = profile.n
    with_i = solve_buyer(Bi, hint=table).profit
    without = solve_buyer(Bi, allowed=set(range(n)) - {i}, hint=table).profit
    return max(with_i - without, 0.0)


def build_best_response(profile: BidProfile, i: int, preferred: bool = True, eps: float = 0.0,
                        table: ChainTable | None = None) -> Bid:
    """At-cost bid plus lump sum ``Z_i`` (``Z_i - eps`` without preferred status)."""
    z = best_response_value(profile, i, table)
    if z <= 0:
        raise PreconditionError(f"supplier {i} cannot earn a positive profit (Z_i = 0)")
    fee = z if preferred else max(z - eps, 0.0)
    return Bid.at_cost(profile.scenario.suppliers[i], fee)


@dataclass
class EquilibriumBundle:
    profile: BidProfile
    form: str
    margins: np.ndarray
    contributing: frozenset
    t_star: np.ndarray
    buyer_profit: float
    supplier_profits: np.ndarray
    thetas: np.ndarray | None = None
    betas: np.ndarray | None = None
    warnings: list = field(default_factory=list)


def power_thetas(scenario: Scenario, table: ChainTable, members, snap: float | None = None):
    """``theta_i = min_{S contains i} (t*_S)_i`` for each ``i`` in ``members``."""
    snap = 1e-9 * scenario.d_bar if snap is None else snap
    th = np.zeros(scenario.n)
    for i in members:
        best, arg = math.inf, None
        for S in subsets_in_order(scenario.n):
            if i in S and table[S].t[i] < best:
                best, arg = table[S].t[i], S
        if best <= snap:
            raise PreconditionError(
                f"power form needs positive reservations: t*_S[{scenario.names[i]}] = 0 "
                f"for S = {{{', '.join(scenario.names[k] for k in sorted(arg))}}}")
        th[i] = best
    return th


def _power_profile(scenario, margins, members, thetas, betas):
    bids = []
    for i, s in enumerate(scenario.suppliers):
        pm = PowerMargin(float(margins[i]), float(thetas[i]), float(betas[i])) if i in members else None
        bids.append(Bid.at_cost(s, power=pm))
    return BidProfile(scenario, bids)


def build_equilibrium(scenario: Scenario, table: ChainTable, form: str = LUMP, beta="auto",
                      points: int = 512, tau: float | None = None,
                      margin_tol: float | None = None,
                      consistency_tol: float = 0.1 * EPS_VERIFY) -> EquilibriumBundle:
    """VCG-margin equilibrium bids in lump-sum or power form.

    ``beta`` is ``"auto"`` (joint doubling search from 2 until every
    consistency slack is at least ``-consistency_tol``, falling back to lump
    sums past ``2**20``), a single number, or one value per supplier.  A
    consistency shortfall becomes a supplier's gain from deviating, so the
    search tolerance sits below the verification tolerance rather than at
    ``tau``.

    Every supplier whose marginal contribution exceeds ``margin_tol`` (by
    default solver noise, ``1e-9`` relative to ``Pi*_C(N)``) is paid its
    margin.  Using ``tau`` here instead would leave suppliers with a small
    but real contribution bidding at cost, and they could then profitably
    deviate by more than the verification tolerance.
    """
    tau = table.tau if tau is None else tau
    rep = check_submodular(table, tau)
    if not rep.holds:
        S, i, j, slack = rep.violations[0]
        names = scenario.names
        raise SubmodularityError(
            "submodularity fails, which rules out the marginal-contribution equilibrium: "
            f"S={{{', '.join(names[k] for k in sorted(S))}}}, i={names[i]}, j={names[j]}, "
            f"slack={slack:.4f}")
    m = marginal_contributions(table)
    if margin_tol is None:
        margin_tol = 1e-9 * max(1.0, abs(table.value(table.full)))
    members = contributing_set(table, margin_tol)
    margins = np.where([i in members for i in range(scenario.n)], m, 0.0)
    N = table.full
    t_star = table[N].t.copy()
    buyer = table.value(N) - margins.sum()
    warnings = []
    if form == POWER:
        for s in scenario.suppliers:
            if not (s.exec_cost.is_nondecreasing and s.res_cost.is_nondecreasing):
                raise PreconditionError("power form needs non-decreasing cost curves")
        thetas = power_thetas(scenario, table, members)
        if beta == "auto":
            b = BETA_START
            while b <= BETA_CAP:
                betas = np.full(scenario.n, b)
                prof = _power_profile(scenario, margins, members, thetas, betas)
                bundle = EquilibriumBundle(prof, POWER, margins, members, t_star, buyer,
                                           margins.copy(), thetas, betas, warnings)
                if min(check_consistency(scenario, table, bundle, points).values()) >= -consistency_tol:
                    return bundle
                b *= 2.0
            warnings.append(f"no beta up to {BETA_CAP:g} passed the consistency check; "
                            "using lump-sum bids")
            log.warning(warnings[-1])
        else:
            betas = np.broadcast_to(np.asarray(beta, dtype=float), (scenario.n,)).copy()
            prof = _power_profile(scenario, margins, members, thetas, betas)
            return EquilibriumBundle(prof, POWER, margins, members, t_star, buyer,
                                     margins.copy(), thetas, betas, warnings)
    elif form != LUMP:
        raise ValueError(f"unknown bid form {form!r}")
    prof = BidProfile.at_cost(scenario, margins)
    return EquilibriumBundle(prof, LUMP, margins, members, t_star, buyer, margins.copy(),
                             warnings=warnings)


def _margin_shortfall(bundle: EquilibriumBundle, idx, rows):
    """``sum_j Delta_j(t_j)``: margin not yet collected at each row."""
    out = np.zeros(rows.shape[0])
    for col, i in enumerate(idx):
        pm = bundle.profile.bids[i].power
        if pm is not None:
            out = out + pm.shortfall(rows[:, col])
    return out


def check_consistency(scenario: Scenario, table: ChainTable, bundle: EquilibriumBundle,
                      points: int = 512, n_starts: int = 4) -> dict:
    """Per-subset slack ``Pi*_C(S) - max_t [Pi_C(t) + sum_{j in S} Delta_j(t_j)]``.

    The maximum runs over ``t`` supported in ``S`` on a lattice of ``points``
    per axis (with local refinement), started from ``t*_T`` for every
    ``T`` within ``S``.  Slacks of ``-tau`` or lower signal that
    the buyer would gain from a reservation other than the chain optimum.  Lump
    sums have ``Delta = 0`` and are trivially consistent.
    """
    out = {}
    caps = scenario.caps
    for S in subsets_in_order(scenario.n):
        idx = sorted(S)
        if not idx or all(bundle.profile.bids[i].power is None for i in idx):
            out[S] = 0.0
            continue
        if all(scenario.suppliers[i].exec_cost.is_constant for i in idx):
            scr = _Screening(scenario.demand, scenario.rho,
                             [scenario.suppliers[i].exec_cost.knot_v[0] for i in idx],
                             [scenario.suppliers[i].res_cost for i in idx])
            base = scr.batch
            pms = [(k, bundle.profile.bids[i].power) for k, i in enumerate(idx)
                   if bundle.profile.bids[i].power is not None]

            def fs(x, scr=scr, pms=pms):
                return scr(x) + sum(pm.shortfall_scalar(x[k]) for k, pm in pms)
        else:
            fs = None
            base = lambda rows, idx=idx: chain_value_batch(scenario, rows, idx)

        def fb(rows, base=base, idx=idx):
            return base(rows) + _margin_shortfall(bundle, idx, rows)

        lower = np.zeros(len(idx))
        # the buyer's best deviations sit near chain optima of sub-supports, which
        # coordinate scans started around t*_S need not reach
        st = default_starts(lower, caps[idx], n_starts) + [
            table[T].t[idx] for T in subsets_in_order(scenario.n) if T <= S]
        _, fx, _ = grid_search(fb, lower, caps[idx], points=points, starts=st, fs=fs)
        cond_a = float(_margin_shortfall(bundle, idx, table[S].t[idx][None])[0])
        out[S] = table.value(S) - max(fx, table.value(S) + cond_a)
    return out


@dataclass
class VerificationReport:
    buyer_t: np.ndarray
    buyer_profit: float
    realized: np.ndarray
    bounds: np.ndarray  # Z_i
    slacks: np.ndarray  # Z_i - realized
    drop_one: np.ndarray  # buyer optimum without supplier i
    deviation_best: np.ndarray  # best realized profit over perturbed bids
    verdict: str
    drop_one_invariant: bool
    vcg_allocation: bool
    eps: float
    tau: float
    seed: int
    perturbations: int
    note: str = ""

    @property
    def is_equilibrium(self) -> bool:
        return self.verdict == "equilibrium"


def _perturbed_bids(profile: BidProfile, i: int, count: int, rng, scale: float):
    """Deterministic family of deviation bids for supplier ``i``."""
    base = profile.bids[i]
    s = profile.scenario.suppliers[i]
    out = []
    for k in range(count):
        dp, dr = rng.uniform(-1.0, 1.0, 2) * 0.1 * scale
        fee = float(rng.uniform(0.0, 1.0)) * scale
        kind = k % 3
        if kind == 0:  # reprice the bid
            b = Bid(base.exec_price.shifted(dp), base.res_price.shifted(dr), base.lump_sum, base.power)
        elif kind == 1:  # at cost with a random fee
            b = Bid.at_cost(s, fee)
        else:  # reprice around cost and charge a fee
            b = Bid(s.exec_cost.shifted(dp), s.res_cost.shifted(dr), fee)
        out.append(b)
    return out


def verify_equilibrium(scenario: Scenario, table: ChainTable | None, profile: BidProfile,
                       eps: float = EPS_VERIFY, tau: float = TAU, perturbations: int = 50,
                       seed: int = 0) -> VerificationReport:
    """Check numerically whether ``profile`` is a Nash equilibrium.

    The verdict is ``equilibrium`` iff every supplier's best-response bound
    exceeds its realized profit by at most ``eps`` and no perturbed bid earns
    more than realized + ``eps``.  Drop-one buyer-profit invariance and the
    marginal-contribution (VCG) split are reported as separate flags; the
    latter needs ``table``.
    """
    n = profile.n
    sol = solve_buyer(profile, hint=table)
    realized = sol.supplier_profits()
    bounds = np.array([best_response_value(profile, i, table) for i in range(n)])
    slacks = bounds - realized
    drop = np.array([solve_buyer(profile, allowed=set(range(n)) - {i}, hint=table).profit
                     for i in range(n)])
    rng = np.random.default_rng(seed)
    scale = max(float(np.max(np.abs(bounds))), float(np.max(np.abs(realized))), 1e-3 * scenario.rho)
    dev = np.full(n, -math.inf)
    for i in range(n):
        for b in _perturbed_bids(profile, i, perturbations, rng, scale):
            dsol = solve_buyer(profile.with_bid(i, b), hint=table)
            dev[i] = max(dev[i], float(dsol.supplier_profits()[i]))
    ok = bool(np.all(slacks <= eps)) and bool(np.all(dev <= realized + eps))
    vcg = False
    if table is not None:
        m = marginal_contributions(table)
        vcg = bool(np.all(np.abs(realized - m) <= tau)
                   and abs(sol.profit - (table.value(table.full) - m.sum())) <= tau)
    return VerificationReport(
        buyer_t=sol.t, buyer_profit=sol.profit, realized=realized, bounds=bounds, slacks=slacks,
        drop_one=drop, deviation_best=dev, verdict="equilibrium" if ok else "not-equilibrium",
        drop_one_invariant=bool(np.all(np.abs(drop - sol.profit) <= tau)), vcg_allocation=vcg,
        eps=eps, tau=tau, seed=seed, perturbations=perturbations, note=sol.note)
