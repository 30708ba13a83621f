"""Chain-optimal reservations and profits for every supplier subset of the
three-supplier example, followed by the equilibrium margins."""
import numpy as np

from capgame import fixtures
from capgame.chain import solve_chain_table
from capgame.equilibrium import LUMP, POWER, build_equilibrium, verify_equilibrium


def main():
    sc = fixtures.table1()
    table = solve_chain_table(sc)
    print(f"{'S':>10}  {'t1':>7} {'t2':>7} {'t3':>7}  {'profit':>7}")
    for S in table.subsets():
        if not S:
            continue
        sol = table[S]
        name = "{" + ",".join(str(i + 1) for i in sorted(S)) + "}"
        print(f"{name:>10}  " + " ".join(f"{x:7.4f}" for x in sol.t) + f"  {sol.value:7.4f}")
    for form in (LUMP, POWER):
        b = build_equilibrium(sc, table, form)
        v = verify_equilibrium(sc, table, b.profile, perturbations=10)
        extra = f", beta {b.betas[0]:g}" if b.betas is not None else ""
        print(f"\n{form}: margins {np.round(b.margins, 4)}, buyer {b.buyer_profit:.4f}{extra}, "
              f"verdict {v.verdict}")


if __name__ == "__main__":
    main()
