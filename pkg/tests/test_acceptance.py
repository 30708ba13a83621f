"""Acceptance suite: one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -s`` (lines are also repeated in the
pytest terminal summary) or ``python3 tests/test_acceptance.py``.
"""
import itertools
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from capgame import fixtures
from capgame.buyer import Bid, BidProfile, solve_buyer
from capgame.chain import SCREENING_EXACT, solve_chain, solve_chain_table, solve_general_table
from capgame.curves import MarginalCurve
from capgame.equilibrium import (LUMP, POWER, best_response_value, build_equilibrium,
                                 verify_equilibrium)
from capgame.merit import dispatch
from capgame.setfunc import FAILS, check_submodular, marginal_contributions
from oracles import grid_max_2d, min_cost_assignment, screening_profit

RESULTS = {}

SEED5, SEED6, SEED7 = 20240501, 20240502, 20240503
N_RANDOM = 200
N_ORACLE = 50
PERTURBATIONS_8 = 3  # per supplier, per bundle; the single-instance default is 50


def record(num, title, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {num}. {title}" + (f": {detail}" if detail else "")
    RESULTS[num] = line
    print(line)
    return ok


def close(a, b, tol):
    return bool(np.all(np.abs(np.asarray(a, float) - np.asarray(b, float)) <= tol))


# -- shared random instances for criteria 5 and 8 -------------------------------------------

_CACHE = {}


def screening_instances():
    if "c5" not in _CACHE:
        rng = np.random.default_rng(SEED5)
        out = []
        for _ in range(N_RANDOM):
            sc = fixtures.random_screening_scenario(rng, int(rng.choice([3, 4])))
            out.append((sc, solve_chain_table(sc)))
        _CACHE["c5"] = out
    return _CACHE["c5"]


# -- criteria -----------------------------------------------------------------------------

TABLE1 = {
    (0,): ((2 / 3, 0, 0), 2.0), (1,): ((0, 11 / 15, 0), 2.0167), (2,): ((0, 0, 0.8), 1.6),
    (0, 1): ((1 / 3, 0.4, 0), 2.1), (0, 2): ((0.5, 0, 0.3), 2.1), (1, 2): ((0, 0.6, 0.2), 2.05),
    (0, 1, 2): ((1 / 3, 4 / 15, 0.2), 2.1333),
}


def test_1_table1():
    sc = fixtures.table1()
    table = solve_chain_table(sc)
    err = max(max(np.max(np.abs(table[S].t - t)), abs(table.value(S) - v))
              for S, (t, v) in TABLE1.items())
    b = build_equilibrium(sc, table, LUMP)
    err_m = float(np.max(np.abs(b.margins - [0.0833, 0.0333, 0.0333])))
    err_b = abs(b.buyer_profit - 1.9833)
    ok = err <= 1e-3 and err_m <= 1e-3 and err_b <= 1e-3
    assert record(1, "Table 1 reproduction", ok,
                  f"max row error {err:.1e}, margin error {err_m:.1e}, buyer error {err_b:.1e}")


def test_2_ms_example():
    sc = fixtures.ms()
    table = solve_chain_table(sc)
    checks = {
        "Pi(N)": close(table.value({0, 1}), 32 / 3, 1e-6) and close(table[{0, 1}].t, [4 / 15, 8 / 15], 1e-6),
        "Pi({i})": close([table.value({0}), table.value({1})], [8, 8], 1e-6),
    }
    b = build_equilibrium(sc, table, LUMP)
    checks["K"] = close(b.margins, [8 / 3, 8 / 3], 1e-6)
    sol = solve_buyer(b.profile)
    checks["buyer"] = close(sol.profit, 16 / 3, 1e-6) and close(sol.t, [4 / 15, 8 / 15], 1e-6)
    p = 50.0
    dev = Bid.constant(p, 60 - 55 * p / 75, 1.0)
    z2 = best_response_value(BidProfile(sc, [dev, dev]), 1)
    checks["Z_2"] = close(z2, 16 / 9, 1e-6)
    bad = [k for k, v in checks.items() if not v]
    assert record(2, "MS example", not bad, f"Z_2 = {z2:.8f}" + (f"; failed {bad}" if bad else ""))


def test_3_example1():
    table = solve_general_table(fixtures.example1())
    m = marginal_contributions(table)
    ok = (close(table.value({0}), 47.5, 1e-2) and close(table.value({1}), 47.5, 1e-2)
          and close(table[{0}].t[0], 75, 1.0) and close(table.value({0, 1}), 66.67, 1e-2)
          and close(table[{0, 1}].t, [50, 50], 1.0) and close(m, [19.17, 19.17], 1e-2))
    assert record(3, "Example 1 (general game)", ok,
                  f"Pi({{1}})={table.value({0}):.4f}, Pi(N)={table.value({0, 1}):.4f}, margins {m.round(4)}")


def test_4_example4():
    table = solve_general_table(fixtures.example4_general(), resolution=40)
    rep = check_submodular(table)
    P = table.value
    N = frozenset({0, 1, 2})
    viol = rep.verdict == FAILS and any(S == N and {i, j} == {0, 1} for S, i, j, _ in rep.violations)
    lhs, rhs = P(N) + P({2}), P({0, 2}) + P({1, 2})
    viol = viol and close([lhs, rhs], [350, 325], 1e-6)
    sc = fixtures.example4()
    ftable = solve_chain_table(sc)
    v37 = verify_equilibrium(sc, ftable, BidProfile.at_cost(sc, [37.5, 37.5, 0.0]), perturbations=6)
    v25 = verify_equilibrium(sc, ftable, BidProfile.at_cost(sc, [25.0, 25.0, 0.0]), perturbations=6)
    ok37 = not v37.is_equilibrium and close(v37.buyer_t, [0, 0, 10], 1e-9) and close(v37.buyer_profit, 150, 1e-9)
    ok = viol and ok37 and v25.is_equilibrium
    assert record(4, "Example 4 (general game)", ok,
                  f"{lhs:.1f} > {rhs:.1f}; K=37.5 {v37.verdict}; K=25 {v25.verdict}")


def test_5_screening_submodular():
    t0 = time.time()
    bad = [k for k, (_, t) in enumerate(screening_instances()) if not check_submodular(t, 1e-5).holds]
    exact = all(s.solver == SCREENING_EXACT for _, t in screening_instances() for s in t.solutions.values())
    ok = not bad and exact
    assert record(5, "Random constant-c scenarios submodular", ok,
                  f"{N_RANDOM - len(bad)}/{N_RANDOM} hold at tau=1e-5 ({time.time() - t0:.0f}s)")


def test_6_two_supplier_submodular():
    t0 = time.time()
    rng = np.random.default_rng(SEED6)
    bad = []
    for k in range(N_RANDOM):
        sc = fixtures.random_two_supplier_scenario(rng)
        if not check_submodular(solve_chain_table(sc), 1e-5).holds:
            bad.append(k)
    assert record(6, "Random two-supplier scenarios submodular", not bad,
                  f"{N_RANDOM - len(bad)}/{N_RANDOM} hold at tau=1e-5 ({time.time() - t0:.0f}s)")


def _unit_curves(costs, h):
    curves = []
    for c in costs:
        xs, vs = [0.0], [c[0]]
        for k in range(1, len(c)):
            xs += [k * h - 1e-9, k * h]
            vs += [c[k - 1], c[k]]
        xs.append(len(c) * h)
        vs.append(c[-1])
        curves.append(MarginalCurve(tuple(xs), tuple(vs)))
    return curves


def test_7_oracle_equivalence():
    rng = np.random.default_rng(SEED7)
    worst = 0.0
    ok_opt = True
    for _ in range(N_ORACLE):
        sc = fixtures.random_screening_scenario(rng, 2)
        c = [s.exec_cost.knot_v[0] for s in sc.suppliers]
        e = [(s.res_cost.xs, s.res_cost.vs) for s in sc.suppliers]
        oracle, _ = grid_max_2d(lambda T: screening_profit(sc.rho, sc.demand, c, e, T), *sc.caps)
        sol = solve_chain(sc, {0, 1})
        ok_opt &= sol.solver == SCREENING_EXACT and sol.value >= oracle - 1e-9
        worst = max(worst, abs(sol.value - oracle))
    # dispatch on discretized instances
    h, mismatches, cases = 0.25, 0, 0
    for _ in range(100):
        n = int(rng.integers(1, 4))
        costs = [sorted(rng.integers(0, 10, int(rng.integers(1, 4))).tolist()) for _ in range(n)]
        curves = _unit_curves([[float(v) for v in c] for c in costs], h)
        t = [len(c) * h for c in costs]
        D, rho = int(rng.integers(0, 12)), float(rng.integers(1, 11))
        s = dispatch(curves, t, D * h, rho)
        alloc, best = min_cost_assignment(costs, D, rho)
        cost = sum(cv.integral(x) for cv, x in zip(curves, s))
        cases += 1
        if abs(s.sum() - sum(alloc) * h) > 1e-6 or abs(cost - best * h) > 1e-6:
            mismatches += 1
    ok = ok_opt and worst <= 1e-4 and mismatches == 0
    assert record(7, "Oracle equivalence", ok,
                  f"max |exact - grid| {worst:.1e} over {N_ORACLE}; dispatch {cases - mismatches}/{cases}")


def _payment_identity(bundle):
    sc = bundle.profile.scenario
    for i in bundle.contributing:
        bid = bundle.profile.bids[i]
        e = sc.suppliers[i].res_cost
        m = bundle.margins[i]
        th = bundle.thetas[i] if bundle.thetas is not None else 0.0
        for t in {max(th, 1e-3 * sc.caps[i]), 0.5 * (th + sc.caps[i]), sc.caps[i]}:
            if bid.payment(t) != e.integral(t) + m:
                return False
    return True


def test_8_equilibrium_round_trip():
    t0 = time.time()
    fails = []
    count = 0
    for k, (sc, table) in enumerate(screening_instances()):
        if not check_submodular(table, 1e-5).holds:
            continue
        for form in (LUMP, POWER):
            b = build_equilibrium(sc, table, form)
            v = verify_equilibrium(sc, table, b.profile, perturbations=PERTURBATIONS_8, seed=k)
            acc = v.buyer_profit + v.realized.sum() - table.value(table.full)
            support = frozenset(np.flatnonzero(v.buyer_t > 0).tolist())
            checks = {"verdict": v.is_equilibrium, "support": support == b.contributing,
                      "accounting": abs(acc) <= 1e-8, "drop-one": v.drop_one_invariant,
                      "identity": _payment_identity(b)}
            count += 1
            bad = [c for c, okc in checks.items() if not okc]
            if bad:
                fails.append((k, form, bad))
    detail = f"{count - len(fails)}/{count} bundles pass ({time.time() - t0:.0f}s)"
    if fails:
        detail += f"; first failures {fails[:3]}"
    assert record(8, "Equilibrium round-trip", not fails, detail)


if __name__ == "__main__":
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_")):
        try:
            fn()
        except AssertionError:
            pass
