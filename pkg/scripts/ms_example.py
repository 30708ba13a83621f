"""Two suppliers: one cheap to reserve, one cheap to execute.

Shows the marginal-contribution equilibrium and why a symmetric profile of
constant-price bids is not one once function bids are allowed.
"""
import argparse

from capgame import fixtures
from capgame.buyer import Bid, BidProfile, solve_buyer
from capgame.chain import solve_chain_table
from capgame.equilibrium import build_equilibrium, build_best_response, verify_equilibrium


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--price", type=float, default=50.0, help="constant execution price p")
    args = ap.parse_args()
    sc = fixtures.ms()
    table = solve_chain_table(sc)
    print(f"Pi(N) = {table.value({0, 1}):.6f} at t = {table[{0, 1}].t.round(6)}")
    print(f"Pi({{1}}) = {table.value({0}):.6f}, Pi({{2}}) = {table.value({1}):.6f}")
    b = build_equilibrium(sc, table)
    sol = solve_buyer(b.profile)
    print(f"lump sums {b.margins.round(6)}, buyer profit {sol.profit:.6f} at t = {sol.t.round(6)}")

    p = args.price
    bid = Bid.constant(p, 60 - 55 * p / 75, 1.0)
    prof = BidProfile(sc, [bid, bid])
    rep = verify_equilibrium(sc, table, prof, perturbations=6)
    print(f"\nconstant bids p={p:g}: verdict {rep.verdict}")
    print(f"  realized {rep.realized.round(6)}, best-response bounds {rep.bounds.round(6)}")
    dev = build_best_response(prof, 1)
    after = solve_buyer(prof.with_bid(1, dev))
    print(f"  supplier 2 deviates to cost + {dev.lump_sum:.6f}: earns {after.supplier_profits()[1]:.6f}")


if __name__ == "__main__":
    main()
