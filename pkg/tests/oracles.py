"""Brute-force reference computations, written without the library's solvers.

Everything here works from raw numbers (costs, knots, demand points) so it
shares no code path with ``capgame`` beyond the input objects.
"""
from __future__ import annotations

import itertools

import numpy as np


def knots_eval(xs, vs, x):
    return np.interp(x, xs, vs)


def knots_integral(xs, vs, t):
    """Integral of a piecewise-linear curve from 0 to ``t`` (scalar or array).

    Trapezoids over the knots below ``t`` plus the partial segment: exact for
    piecewise-linear curves.
    """
    xs = np.asarray(xs, float)
    vs = np.asarray(vs, float)
    cum = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(xs) * (vs[:-1] + vs[1:]))))
    t = np.asarray(t, float)
    k = np.clip(np.searchsorted(xs, t, side="right") - 1, 0, xs.size - 2)
    vt = np.interp(t, xs, vs)
    out = cum[k] + 0.5 * (t - xs[k]) * (vs[k] + vt)
    return out if out.ndim else float(out)


def demand_points(kind, values, weights):
    """(points, probs) for discrete demand; a fine uniform quadrature otherwise."""
    if kind == "discrete":
        return np.asarray(values, float), np.asarray(weights, float)
    lo, hi = values
    m = 200_000
    z = lo + (hi - lo) * (np.arange(m) + 0.5) / m
    return z, np.full(m, 1.0 / m)


def tail_expectation(demand, a, t):
    """``E[min((D - a)^+, t)]`` for uniform (closed form) or discrete demand; broadcasts."""
    a = np.asarray(a, float)
    t = np.asarray(t, float)
    if demand.kind == "discrete":
        d = np.asarray(demand.values, float)
        p = np.asarray(demand.weights, float)
        return np.sum(p * np.clip(d - a[..., None], 0.0, t[..., None]), axis=-1)
    lo, hi = demand.values

    def G(z):  # int_lo^z Pr[D > y] dy for z in [lo, hi]
        z = np.clip(z, lo, hi)
        return (z - lo) - (z - lo) ** 2 / (2.0 * (hi - lo))

    below = np.maximum(0.0, np.minimum(a + t, lo) - a)  # Pr[D > y] = 1 below lo
    return below + G(a + t) - G(np.maximum(a, lo))


def screening_profit(rho, demand, c, e_knots, t):
    """Chain profit with constant execution costs ``c`` by the tail formula.

    ``e_knots[i] = (xs, vs)``; ``t`` has shape ``(n,)`` or ``(B, n)``.
    Suppliers are dispatched in order of ``c`` (index breaks ties), only if
    ``c < rho``.
    """
    t = np.asarray(t, float)
    order = sorted(range(len(c)), key=lambda i: (c[i], i))
    total = np.zeros(t.shape[:-1])
    below = np.zeros(t.shape[:-1])
    for i in order:
        ti = t[..., i]
        if c[i] < rho:
            total = total + (rho - c[i]) * tail_expectation(demand, below, ti)
            below = below + ti
        total = total - knots_integral(*e_knots[i], ti)
    return total if total.ndim else float(total)


def grid_max_2d(fb, cap1, cap2, points=100, stages=3, window=2):
    """Maximum of a batched ``fb(T)`` over a box by repeated ``points^2`` lattices.

    Each stage re-centres a lattice ``window`` cells either side of the
    previous stage's best point, so the step shrinks by ``points / (2 window)``
    per stage.  Returns ``(best value, best point)``.
    """
    lo = np.array([0.0, 0.0])
    hi = np.array([cap1, cap2], dtype=float)
    best_v, best_x = -np.inf, None
    for _ in range(stages):
        g1 = np.linspace(lo[0], hi[0], points)
        g2 = np.linspace(lo[1], hi[1], points)
        A, B = np.meshgrid(g1, g2, indexing="ij")
        rows = np.stack([A.ravel(), B.ravel()], axis=1)
        vals = fb(rows)
        k = int(np.argmax(vals))
        if vals[k] > best_v:
            best_v, best_x = float(vals[k]), rows[k]
        h = np.array([g1[1] - g1[0], g2[1] - g2[0]])
        lo = np.maximum(0.0, best_x - window * h)
        hi = np.minimum([cap1, cap2], best_x + window * h)
    return best_v, best_x


def min_cost_assignment(unit_costs, D, rho):
    """Exhaustive min-cost service of ``D`` units given per-supplier unit cost lists.

    ``unit_costs[i]`` lists the marginal cost of each unit of supplier ``i`` in
    order (a supplier's k-th unit can only be used after its first k-1).
    Units costing ``rho`` or more are never worth serving.  Returns
    ``(served, cost)`` minimizing cost among allocations that serve the
    maximal profitable amount.
    """
    n = len(unit_costs)
    usable = [[c for c in uc if c < rho] for uc in unit_costs]
    # units are prefix-ordered: only the first k of each supplier can be used
    for i in range(n):
        k = 0
        while k < len(unit_costs[i]) and unit_costs[i][k] < rho:
            k += 1
        usable[i] = unit_costs[i][:k]
    target = min(D, sum(len(u) for u in usable))
    best = None
    for alloc in itertools.product(*[range(len(u) + 1) for u in usable]):
        if sum(alloc) != target:
            continue
        cost = sum(sum(usable[i][:alloc[i]]) for i in range(n))
        if best is None or cost < best[1] - 1e-12:
            best = (alloc, cost)
    return best


def chain_profit_units(rho, demand_pts, demand_probs, exec_knots, res_knots, t, units=400):
    """Chain profit by splitting each reservation into small units.

    Midpoint marginal costs per unit; dispatch of each demand point by sorting
    unit costs.  Converges at O(1/units^2) for smooth curves.
    """
    n = len(t)
    costs, sizes = [], []
    res = 0.0
    for i in range(n):
        if t[i] <= 0:
            continue
        h = t[i] / units
        mid = (np.arange(units) + 0.5) * h
        costs.append(knots_eval(*exec_knots[i], mid))
        sizes.append(np.full(units, h))
        res += knots_integral(*res_knots[i], t[i])
    if not costs:
        return 0.0
    c = np.concatenate(costs)
    s = np.concatenate(sizes)
    keep = c < rho
    c, s = c[keep], s[keep]
    o = np.argsort(c, kind="stable")
    c, s = c[o], s[o]
    cum = np.concatenate(([0.0], np.cumsum(s)))
    val = 0.0
    for d, p in zip(demand_pts, demand_probs):
        used = np.clip(d - cum[:-1], 0.0, s)
        val += p * np.sum((rho - c) * used)
    return val - res
