"""Merit-order dispatch and the exact expected-value integrals built on it.

Two independent routes to the same numbers live here:

* :func:`unit_usage` integrates over the units of one supplier, weighting unit
  ``x`` by the probability ``Pr[D >= h_i(x)]`` that it is dispatched, where
  ``h_i`` is the merit-order position of that unit.  This is the per-supplier
  form used for buyer, supplier and chain profits.
* :func:`dispatch_value` integrates over price: the expected value of optimal
  dispatch equals ``int_0^rho E[min(D, S_t(p))] dp`` where ``S_t(p)`` is the
  reserved capacity offered at price ``<= p``.  It is batched over many
  reservation vectors and drives the numerical solvers.

Both are exact: between the breakpoints they insert, every integrand is a
polynomial of degree at most two, which two-point Gauss-Legendre integrates
exactly.

Ties in execution price are broken by supplier index: supplier ``j``'s units
at a given price are dispatched before supplier ``i``'s iff ``j < i``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .curves import MarginalCurve, UnsupportedCurveError
from .demand import DemandModel

_GAUSS = np.array([-1.0, 1.0]) / np.sqrt(3.0)


def _check_monotone(curves):
    for c in curves:
        if not c.is_nondecreasing:
            raise UnsupportedCurveError("merit order needs non-decreasing execution curves")


def merit_position(order: Sequence[MarginalCurve], t, i: int, x):
    """Cumulative dispatched quantity once unit ``x`` of supplier ``i`` is used.

    ``x + sum_{j != i} sup{0 <= y <= t_j : p_j(y) <= p_i(x)}`` with the
    inequality strict for ``j > i`` (index tie-break).
    """
    _check_monotone(order)
    x = np.asarray(x, dtype=float)
    price = order[i](x)
    h = x.copy()
    for j, curve in enumerate(order):
        if j == i or t[j] <= 0:
            continue
        if j < i:
            h = h + curve.inverse_sup(t[j], price)
        else:
            h = h + curve.inverse_inf(t[j], price)
    return h if h.ndim else float(h)


def _order_levels(order, t, i, rho):
    """Price levels at which ``h_i`` may change slope or jump."""
    levels = [rho]
    for j, curve in enumerate(order):
        if j == i or t[j] <= 0:
            continue
        inside = curve.knot_x < t[j]
        levels.extend(curve.knot_v[inside].tolist())
        levels.append(float(curve(t[j])))
    return np.unique(levels)


def unit_usage(demand: DemandModel, rho: float, order, t, i: int, weight=(0.0, ())) -> float:
    """``int_0^{t_i} w(x) Pr[D >= h_i(x)] 1{p_i(x) < rho} dx``, exactly.

    ``order`` holds the execution-price curves that determine dispatch.
    ``weight`` is ``(const, ((coef, curve), ...))`` describing the
    piecewise-linear weight ``w(x) = const + sum coef * curve(x)``.  Units
    priced at or above ``rho`` are never dispatched.
    """
    t = np.asarray(t, dtype=float)
    ti = float(t[i])
    if ti <= 0:
        return 0.0
    _check_monotone(order)
    const, terms = weight
    own = order[i]
    cuts = [0.0, ti]
    for curve in [own] + [c for _, c in terms]:
        cuts.extend(curve.knot_x[(curve.knot_x > 0) & (curve.knot_x < ti)].tolist())
    levels = _order_levels(order, t, i, rho)
    cuts.extend(np.asarray(own.inverse_inf(ti, levels)).tolist())
    cuts.extend(np.asarray(own.inverse_sup(ti, levels)).tolist())
    xs = np.unique(np.clip(cuts, 0.0, ti))
    a, b = xs[:-1], xs[1:]
    keep = b - a > 1e-15 * max(ti, 1.0)
    a, b = a[keep], b[keep]
    if a.size == 0:
        return 0.0
    # h_i is affine on each (a, b); recover it from two interior points
    q1, q2 = a + (b - a) / 3.0, a + 2.0 * (b - a) / 3.0
    h1 = merit_position(order, t, i, q1)
    h2 = merit_position(order, t, i, q2)
    slope = (h2 - h1) / (q2 - q1)
    ha = h1 + (a - q1) * slope
    hb = h1 + (b - q1) * slope
    z = demand.breakpoints
    dh = hb - ha
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = a[:, None] + (z[None, :] - ha[:, None]) / dh[:, None] * (b - a)[:, None]
    cross = np.where(np.abs(dh)[:, None] > 0, cross, a[:, None])
    cross = np.clip(cross, a[:, None], b[:, None])
    pts = np.sort(np.concatenate([a[:, None], cross, b[:, None]], axis=1), axis=1)
    lo, hi = pts[:, :-1], pts[:, 1:]
    total = 0.0
    for g in _GAUSS:
        node = 0.5 * (lo + hi) + 0.5 * g * (hi - lo)
        hval = ha[:, None] + (node - a[:, None]) * slope[:, None]
        w = const + sum(coef * curve(node) for coef, curve in terms)
        used = own(node) < rho
        total += float(np.sum(0.5 * (hi - lo) * w * demand.survival(hval) * used))
    return total


def dispatch_value(demand: DemandModel, rho: float, order: Sequence[MarginalCurve], T) -> np.ndarray:
    """Expected value of optimal dispatch, batched over reservation vectors.

    Returns ``E[rho * served - execution payment]`` for each row of ``T``
    (shape ``(B, n)``), computed as ``int_0^rho E[min(D, S_t(p))] dp``.
    """
    _check_monotone(order)
    T = np.atleast_2d(np.asarray(T, dtype=float))
    B, n = T.shape
    fixed = [0.0, rho]
    for curve in order:
        fixed.extend(curve.knot_v.tolist())
    fixed = np.unique(np.clip(fixed, 0.0, rho))
    at_cap = np.column_stack([np.clip(order[k](T[:, k]), 0.0, rho) for k in range(n)]) if n else np.zeros((B, 0))
    L = np.sort(np.concatenate([np.broadcast_to(fixed, (B, fixed.size)), at_cap], axis=1), axis=1)
    a, b = L[:, :-1], L[:, 1:]
    Sa = np.zeros_like(a)
    Sb = np.zeros_like(b)
    for k in range(n):
        cap = T[:, k:k + 1]
        Sa += np.minimum(order[k].inverse_sup(np.inf, a), cap)
        Sb += np.minimum(order[k].inverse_inf(np.inf, b), cap)
    z = demand.breakpoints
    dS = Sb - Sa
    width = b - a
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = a[..., None] + (z - Sa[..., None]) / dS[..., None] * width[..., None]
    cross = np.where((dS > 0)[..., None], cross, a[..., None])
    cross = np.clip(cross, a[..., None], b[..., None])
    pts = np.sort(np.concatenate([a[..., None], cross, b[..., None]], axis=-1), axis=-1)
    lo, hi = pts[..., :-1], pts[..., 1:]
    safe = np.where(width > 0, width, 1.0)[..., None]
    total = np.zeros(B)
    for g in _GAUSS:
        node = 0.5 * (lo + hi) + 0.5 * g * (hi - lo)
        S = Sa[..., None] + dS[..., None] * (node - a[..., None]) / safe
        total += np.sum(0.5 * (hi - lo) * demand.expected_min(S), axis=(1, 2))
    return total


def dispatch(order: Sequence[MarginalCurve], t, D: float, rho: float) -> np.ndarray:
    """Cost-minimal amounts meeting demand ``D`` from reserved capacity ``t``.

    Capacity is filled in merit order (index tie-break) up to
    ``min(D, capacity priced below rho)``.
    """
    _check_monotone(order)
    t = np.asarray(t, dtype=float)
    n = len(order)

    def below(p):
        return np.array([order[j].inverse_inf(t[j], p) if t[j] > 0 else 0.0 for j in range(n)])

    def upto(p):
        return np.array([order[j].inverse_sup(t[j], p) if t[j] > 0 else 0.0 for j in range(n)])

    target = min(float(D), float(below(rho).sum()))
    if target <= 0:
        return np.zeros(n)
    levels = [0.0, rho]
    for j, curve in enumerate(order):
        if t[j] > 0:
            levels.extend(curve.knot_v[curve.knot_x < t[j]].tolist())
            levels.append(float(curve(t[j])))
    levels = np.unique(np.clip(levels, 0.0, rho))
    prev = None
    for lev in levels:
        if upto(lev).sum() >= target:
            break
        prev = lev
    s_lt = below(lev)
    if prev is not None and s_lt.sum() >= target:
        # marginal price strictly between two levels: unique and untied
        s_prev = upto(prev).sum()
        frac = (target - s_prev) / (s_lt.sum() - s_prev)
        lam = prev + frac * (lev - prev)
        return upto(lam) if lam < lev else s_lt
    s = s_lt.copy()
    rest = target - s.sum()
    extra = upto(lev) - s_lt
    for j in range(n):
        take = min(rest, extra[j])
        s[j] += take
        rest -= take
    return s
