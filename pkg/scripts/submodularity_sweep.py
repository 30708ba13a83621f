"""Submodularity of the chain set function on random scenarios."""
import argparse
import time

import numpy as np

from capgame import fixtures
from capgame.chain import solve_chain_table
from capgame.setfunc import check_submodular


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--kind", choices=["screening", "two"], default="screening",
                    help="constant execution costs (n = 3, 4) or two general suppliers")
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tau", type=float, default=1e-5)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    t0 = time.time()
    worst, fails = np.inf, 0
    for k in range(args.count):
        if args.kind == "screening":
            sc = fixtures.random_screening_scenario(rng, int(rng.choice([3, 4])))
        else:
            sc = fixtures.random_two_supplier_scenario(rng)
        rep = check_submodular(solve_chain_table(sc), args.tau)
        worst = min(worst, rep.min_slack)
        if not rep.holds:
            fails += 1
            print(f"instance {k}: {rep.verdict}, first violation {rep.violations[0]}")
    print(f"{args.count - fails}/{args.count} submodular, min slack {worst:.2e}, "
          f"{time.time() - t0:.1f}s")


if __name__ == "__main__":
    main()
