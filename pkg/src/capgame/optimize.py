"""Box-constrained maximizers used by the chain and buyer solvers.

``exchange_ascent`` is cyclic line-search ascent over the unit directions and
the pairwise exchange directions ``e_i - e_j``.  For M-natural-concave
objectives (laminar concave ones included) a point that no such direction
improves is a global maximizer, which is what makes the constant-execution-cost
chain problem exactly solvable this way.

``grid_search`` is the fallback for objectives without that structure:
multi-start coordinate scans over a lattice followed by local refinements.
It carries no global guarantee.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f, lo: float, hi: float, tol: float):
    """Golden-section maximization of a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(x, f(x))``; the end points are compared too, so a maximum on
    the boundary is found exactly.
    """
    flo, fhi = f(lo), f(hi)
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x, fx = (c, fc) if fc >= fd else (d, fd)
    if flo >= fx and flo >= fhi:
        return lo, flo
    if fhi >= fx:
        return hi, fhi
    return x, fx


def _directions(n: int, exchange: bool):
    dirs = [np.eye(n)[k] for k in range(n)]
    if exchange:
        for k, l in itertools.combinations(range(n), 2):
            d = np.zeros(n)
            d[k], d[l] = 1.0, -1.0
            dirs.append(d)
    return dirs


def exchange_ascent(f, x0, lower, upper, tol_x: float = 1e-9, tol_f: float = 1e-12,
                    exchange: bool = True, max_passes: int = 500):
    """Maximize ``f`` over a box by cyclic golden-section line searches.

    ``f`` receives points as plain lists of floats.  Passes over all
    directions repeat until none improves ``f`` by more than ``tol_f``.
    Returns ``(x, f(x), passes)``.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    lo_l, hi_l = lower.tolist(), upper.tolist()
    x = np.clip(np.asarray(x0, dtype=float), lower, upper).tolist()
    fx = f(x)
    dirs = [d for d in _directions(len(x), exchange) if np.any(upper[d != 0] > lower[d != 0])]
    dirs = [[(k, float(d[k])) for k in np.flatnonzero(d)] for d in dirs]

    def moved(x, d, s):
        y = list(x)
        for k, dk in d:
            y[k] = min(max(x[k] + s * dk, lo_l[k]), hi_l[k])
        return y

    passes = 0
    for passes in range(1, max_passes + 1):
        improved = False
        for d in dirs:
            lo, hi = -math.inf, math.inf
            for k, dk in d:
                a, b = (lo_l[k] - x[k]) / dk, (hi_l[k] - x[k]) / dk
                if a > b:
                    a, b = b, a
                lo, hi = max(lo, a), min(hi, b)
            if hi - lo <= tol_x:
                continue
            lam, val = golden_max(lambda s: f(moved(x, d, s)), lo, hi, tol_x)
            if val > fx + tol_f:
                x = moved(x, d, lam)
                fx = val
                improved = True
        if not improved:
            break
    # land on the box face when the optimum sits within tolerance of it
    for k in range(len(x)):
        for bound in (lo_l[k], hi_l[k]):
            if 0 < abs(x[k] - bound) <= 10 * tol_x:
                y = list(x)
                y[k] = bound
                fy = f(y)
                if fy >= fx - tol_f:
                    x, fx = y, fy
    return np.array(x), fx, passes


def default_starts(lower, upper, count: int = 8, seed: int = 0):
    """Deterministic start points: corners, centre, single-axis corners, then seeded draws."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = lower.size
    starts = [lower.copy(), upper.copy(), 0.5 * (lower + upper)]
    for k in range(n):
        s = lower.copy()
        s[k] = upper[k]
        starts.append(s)
    rng = np.random.default_rng(seed)
    while len(starts) < count:
        starts.append(lower + rng.random(n) * (upper - lower))
    unique = []
    for s in starts:
        if not any(np.array_equal(s, u) for u in unique):
            unique.append(s)
    return unique[:count]


def _coordinate_scans(fb, x, fx, axes, tol_f, max_sweeps=50):
    """Move one coordinate at a time to the best lattice value on its axis."""
    n = x.size
    for _ in range(max_sweeps):
        moved = False
        for k in range(n):
            cand = axes[k](x[k])
            if cand.size == 0:
                continue
            rows = np.repeat(x[None, :], cand.size, axis=0)
            rows[:, k] = cand
            vals = fb(rows)
            j = int(np.argmax(vals))
            if vals[j] > fx + tol_f:
                x, fx = rows[j].copy(), float(vals[j])
                moved = True
        if not moved:
            break
    return x, fx


def _multi_scans(fb, X, F, candidates, tol_f, max_sweeps=50):
    """:func:`_coordinate_scans` run for every row of ``X`` at once.

    ``candidates(k, v)`` maps the current column ``v`` (one value per row) to
    an ``(m, P)`` array of trial values.  Rows evolve independently, so the
    result is the same as scanning each start on its own.
    """
    m, n = X.shape
    active = np.ones(m, dtype=bool)  # a row that stays put for a full sweep has converged
    for _ in range(max_sweeps):
        moved = np.zeros(m, dtype=bool)
        for k in range(n):
            rows_idx = np.flatnonzero(active)
            if rows_idx.size == 0:
                break
            C = candidates(k, X[:, k])[rows_idx]
            P = C.shape[1]
            if P == 0:
                continue
            # starts often merge; scan each distinct point once
            _, first, inv = np.unique(X[rows_idx], axis=0, return_index=True, return_inverse=True)
            rows = np.repeat(X[rows_idx[first]], P, axis=0)
            rows[:, k] = C[first].ravel()
            V = fb(rows).reshape(first.size, P)[inv.ravel()]
            j = np.argmax(V, axis=1)
            best = V[np.arange(rows_idx.size), j]
            upd = best > F[rows_idx] + tol_f
            if upd.any():
                r = rows_idx[upd]
                X[r, k] = C[upd, j[upd]]
                F[r] = best[upd]
                moved[r] = True
        active = moved
        if not moved.any():
            break
    return X, F


def grid_search(fb, lower, upper, points: int = 200, refinements: int = 2, factor: int = 10,
                starts=None, n_starts: int = 8, seed: int = 0, tol_f: float = 1e-12,
                polish: bool = True, return_all: bool = False, fs=None):
    """Multi-start lattice search for a batched objective ``fb(rows) -> values``.

    Each start runs coordinate scans on a ``points``-per-axis lattice, then
    ``refinements`` rounds of scans on a lattice ``factor`` times finer around
    the incumbent.  With ``polish`` a final local golden-section ascent runs
    inside the last lattice cell.  Returns ``(x, f(x), resolution)`` where
    ``resolution`` is the finest lattice step used; with ``return_all`` the
    first item is instead the list of ``(x, f(x))`` reached from every start,
    best first.  ``fs`` is an optional scalar version of ``fb`` for the
    polish step.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = lower.size
    if n == 0:
        x, fx = np.zeros(0), float(fb(np.zeros((1, 0)))[0])
        return ([(x, fx)] if return_all else x), fx, 0.0
    span = upper - lower
    if starts is None:
        starts = default_starts(lower, upper, n_starts, seed)
    X = np.clip(np.array([np.asarray(s, dtype=float) for s in starts]), lower, upper)
    F = np.asarray(fb(X), dtype=float).copy()
    m = X.shape[0]
    coarse = [np.linspace(lower[k], upper[k], points) for k in range(n)]
    X, F = _multi_scans(fb, X, F, lambda k, v: np.broadcast_to(coarse[k], (m, points)), tol_f)
    h = span / (points - 1)
    offsets = np.linspace(-1.0, 1.0, 2 * factor + 1)
    for _ in range(refinements):
        X, F = _multi_scans(
            fb, X, F,
            lambda k, v, w=h.copy(): np.clip(v[:, None] + w[k] * offsets, lower[k], upper[k]),
            tol_f)
        h = h / factor
    found = [(X[r].copy(), float(F[r])) for r in range(m)]
    j = int(np.argmax(F))  # first maximal start wins ties
    best_x, best_f = found[j]
    if polish:
        box_lo = np.maximum(lower, best_x - h * factor)
        box_hi = np.minimum(upper, best_x + h * factor)
        f1 = fs if fs is not None else (lambda y: float(fb(np.asarray(y)[None, :])[0]))
        x, fx, _ = exchange_ascent(f1, best_x, box_lo, box_hi,
                                   tol_x=1e-9 * max(float(span.max()), 1.0), tol_f=tol_f)
        if fx > best_f:
            best_x, best_f = x, fx
    res = float((h * factor).max())
    if return_all:
        found.sort(key=lambda p: -p[1])
        return [(best_x, best_f)] + found, best_f, res
    return best_x, best_f, res
