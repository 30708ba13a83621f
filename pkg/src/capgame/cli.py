"""``capgame`` command line.

Each subcommand builds one :class:`Report`; the human table and the ``--json``
document are both rendered from it.  Exit codes: 0 ok, 2 input error,
3 size limit, 4 precondition failure (e.g. submodularity).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import fixtures
from .buyer import BidProfile, solve_buyer
from .chain import (GeneralGame, Scenario, SizeLimitError, solve_chain, solve_chain_table,
                    solve_general_table, subsets_in_order)
from .curves import UnsupportedCurveError
from .equilibrium import (EPS_VERIFY, LUMP, POWER, PreconditionError, build_equilibrium,
                          verify_equilibrium)
from .io import InputError, dumps_bids, load_bids, load_scenario
from .setfunc import certify, check_submodular, check_telescoping, marginal_contributions

EXIT_OK, EXIT_INPUT, EXIT_LIMIT, EXIT_PRECONDITION = 0, 2, 3, 4


@dataclass
class Report:
    command: str
    summary: str = ""
    fields: dict = field(default_factory=dict)
    columns: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    params: dict = field(default_factory=dict)  # run settings, printed verbatim

    def to_json(self) -> dict:
        return {"command": self.command, "summary": self.summary, "fields": _plain(self.fields),
                "rows": [_plain(dict(zip(self.columns, r))) for r in self.rows],
                "params": _plain(self.params)}

    def to_text(self) -> str:
        out = [self.summary] if self.summary else []
        for k, v in self.fields.items():
            out.append(f"{k}: {_fmt(v)}")
        for k, v in self.params.items():
            out.append(f"{k}: {v}")
        if self.columns and self.rows:
            cells = [[str(c) for c in self.columns]] + [[_fmt(v) for v in r] for r in self.rows]
            width = [max(len(r[k]) for r in cells) for k in range(len(self.columns))]
            for r in cells:
                out.append("  ".join(c.rjust(w) for c, w in zip(r, width)))
        return "\n".join(out)


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return str(v)
        return f"{0.0 if abs(v) < 5e-5 else v:.4f}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    return str(v)


def _set_name(names, S) -> str:
    return "{" + ",".join(names[k] for k in sorted(S)) + "}"


# -- inputs -------------------------------------------------------------------

def _market(args):
    """Scenario or general game from ``--fixture`` or the scenario path."""
    if args.fixture:
        if args.fixture in fixtures.GAMES and args.command in ("chain", "submod"):
            return fixtures.GAMES[args.fixture]()
        if args.fixture in fixtures.SCENARIOS:
            return fixtures.SCENARIOS[args.fixture]()
        if args.fixture in fixtures.GAMES:
            if args.command == "equilibrium":
                return fixtures.GAMES[args.fixture]()
            raise InputError(f"fixture {args.fixture!r} is not a function-bid game")
        raise InputError(f"unknown fixture {args.fixture!r}")
    if not args.paths:
        raise InputError("a scenario path or --fixture is required")
    return load_scenario(args.paths[0])


def _bids(args, scenario) -> BidProfile:
    paths = args.paths[0 if args.fixture else 1:]
    if not paths:
        raise InputError("a bids path is required")
    return load_bids(paths[0], scenario)


def _table(market):
    if isinstance(market, GeneralGame):
        return solve_general_table(market)
    return solve_chain_table(market)


def _subset(names, spec: str) -> frozenset:
    out = set()
    for name in spec.split(","):
        name = name.strip()
        if name not in names:
            raise InputError(f"--subset: unknown supplier {name!r}")
        out.add(names.index(name))
    return frozenset(out)


# -- commands -----------------------------------------------------------------

def cmd_chain(args) -> Report:
    market = _market(args)
    names = list(market.names)
    if args.subset:
        if isinstance(market, GeneralGame):
            sols = [_table(market)[_subset(names, args.subset)]]
        else:
            sols = [solve_chain(market, _subset(names, args.subset))]
    else:
        table = _table(market)
        sols = [table[S] for S in subsets_in_order(len(names)) if S]
    rows = [[_set_name(names, s.subset), *s.t.tolist(), s.value, s.solver] for s in sols]
    return Report("chain", columns=["S", *[f"t_{n}" for n in names], "profit", "solver"], rows=rows)


def cmd_submod(args) -> Report:
    market = _market(args)
    names = list(market.names)
    table = _table(market)
    cert = certify(market) if isinstance(market, Scenario) else "none"
    rep = check_submodular(table, certificate=cert)
    P = table.value
    if rep.holds:
        summary = f"{rep.verdict}; certificate: {cert}"
    else:
        S, i, j, _ = rep.violations[0]
        lhs = P(S) + P(S - {i, j})
        rhs = P(S - {i}) + P(S - {j})
        summary = f"fails: {lhs:.4f} > {rhs:.4f}"
    rows = [[_set_name(names, S), names[i], names[j], s] for S, i, j, s in rep.violations]
    tele = min(s for _, s in check_telescoping(table))
    return Report("submod", summary,
                  {"verdict": rep.verdict, "certificate": cert, "min_slack": rep.min_slack,
                   "min_telescoping_slack": tele,
                   "marginal_contributions": marginal_contributions(table)},
                  ["S", "i", "j", "slack"], rows)


def _beta(spec: str):
    if spec == "auto":
        return "auto"
    try:
        vals = [float(v) for v in spec.split(",")]
    except ValueError:
        raise InputError(f"--beta: expected 'auto' or numbers, got {spec!r}") from None
    return vals[0] if len(vals) == 1 else vals


def cmd_equilibrium(args) -> Report:
    market = _market(args)
    names = list(market.names)
    table = _table(market)
    if isinstance(market, GeneralGame):
        rep = check_submodular(table)
        if not rep.holds:
            raise PreconditionError("submodularity fails")
        m = marginal_contributions(table)
        return Report("equilibrium", "lump-sum margins (general game, no bids file)",
                      {"margins": m, "buyer_profit": table.value(table.full) - m.sum()},
                      ["supplier", "margin"], [[n, v] for n, v in zip(names, m)])
    form = POWER if args.form == "power" else LUMP
    bundle = build_equilibrium(market, table, form=form, beta=_beta(args.beta))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dumps_bids(bundle.profile) + "\n")
    fields = {"form": bundle.form, "margins": bundle.margins, "buyer_profit": bundle.buyer_profit,
              "t_star": bundle.t_star, "supplier_profits": bundle.supplier_profits}
    if bundle.betas is not None:
        fields["thetas"] = bundle.thetas
        fields["betas"] = bundle.betas
    for k, w in enumerate(bundle.warnings):
        fields[f"warning_{k + 1}"] = w
    rows = [[n, bundle.margins[k], bundle.supplier_profits[k]] for k, n in enumerate(names)]
    return Report("equilibrium", f"{bundle.form} equilibrium", fields,
                  ["supplier", "margin", "profit"], rows)


def cmd_verify(args) -> Report:
    sc = _market(args)
    profile = _bids(args, sc)
    table = solve_chain_table(sc)
    rep = verify_equilibrium(sc, table, profile, eps=args.eps)
    rows = [[n, rep.realized[k], rep.bounds[k], rep.slacks[k], rep.deviation_best[k], rep.drop_one[k]]
            for k, n in enumerate(sc.names)]
    fields = {"verdict": rep.verdict, "buyer_t": rep.buyer_t, "buyer_profit": rep.buyer_profit,
              "drop_one_invariant": rep.drop_one_invariant, "vcg_allocation": rep.vcg_allocation}
    params = {"eps": rep.eps, "tau": rep.tau, "seed": rep.seed, "perturbations": rep.perturbations}
    return Report("verify", rep.verdict, fields,
                  ["supplier", "realized", "bound", "slack", "best_deviation", "drop_one"], rows,
                  params)


def cmd_buyer(args) -> Report:
    sc = _market(args)
    profile = _bids(args, sc)
    sol = solve_buyer(profile)
    prof = sol.supplier_profits()
    fields = {"t": sol.t, "profit": sol.profit, "chain_profit": sol.chain_profit,
              "solver": sol.solver, "ties": sol.ties}
    return Report("buyer", "", fields, ["supplier", "reserved", "supplier_profit"],
                  [[n, sol.t[k], prof[k]] for k, n in enumerate(sc.names)])


COMMANDS = {"chain": cmd_chain, "submod": cmd_submod, "equilibrium": cmd_equilibrium,
            "verify": cmd_verify, "buyer": cmd_buyer}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="capgame", description="Capacity game solver")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("paths", nargs="*", help="scenario file, then bids file where needed")
    ap.add_argument("--all", action="store_true", help="every subset (default for chain)")
    ap.add_argument("--subset", help="comma-separated supplier names")
    ap.add_argument("--form", choices=["lump", "power"], default="lump")
    ap.add_argument("--beta", default="auto")
    ap.add_argument("--eps", type=float, default=EPS_VERIFY)
    ap.add_argument("--json", action="store_true")
    ap.add_argument("--fixture", help="built-in example: " + "|".join(
        sorted(set(fixtures.SCENARIOS) | set(fixtures.GAMES))))
    ap.add_argument("--out", help="write the equilibrium bids file here")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        report = COMMANDS[args.command](args)
    except SizeLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (InputError, UnsupportedCurveError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.json:
        print(json.dumps(report.to_json(), indent=2))
    else:
        print(report.to_text())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
