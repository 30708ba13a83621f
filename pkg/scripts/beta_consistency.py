"""Consistency slack of the power-form bids as a function of beta.

The buyer's alternative to the chain optimum is to reserve slightly less from
a supplier and skip part of its margin; with a power margin the skipped part
shrinks like (eps/theta)^(beta+1) while the cost loss is quadratic in eps, so
the sign of the worst slack changes around beta = 1 on the three-supplier
example.
"""
import argparse

from capgame import fixtures
from capgame.chain import solve_chain_table
from capgame.equilibrium import POWER, build_equilibrium, check_consistency


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--betas", default="0.3,0.5,0.9,0.99,1.01,1.5,2,4")
    args = ap.parse_args()
    sc = fixtures.table1()
    table = solve_chain_table(sc)
    for beta in (float(b) for b in args.betas.split(",")):
        b = build_equilibrium(sc, table, form=POWER, beta=beta)
        slack = check_consistency(sc, table, b)
        S, worst = min(slack.items(), key=lambda kv: kv[1])
        name = "{" + ",".join(str(i + 1) for i in sorted(S)) + "}"
        print(f"beta {beta:5.2f}: worst slack {worst: .3e} at S = {name}")


if __name__ == "__main__":
    main()
