"""The set function S -> Pi*_C(S) and its structural checks.

Submodularity of this function is what makes the VCG split of the chain
profit an equilibrium outcome; the checks here operate purely on a
:class:`~capgame.chain.ChainTable`, while :func:`certify` reads the
scenario's curve metadata and never looks at solver output.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainTable, Scenario, solve_chain, subsets_in_order

HOLDS = "holds"
FAILS = "fails"
HOLDS_TOL = "holds-within-tolerance"

CERT_TWO = "two-supplier"
CERT_SCREENING = "constant-exec-convex-res"
CERT_NONE = "none"


class IncompleteTableError(ValueError):
    pass


@dataclass
class SubmodularityReport:
    verdict: str
    violations: list = field(default_factory=list)  # (S, i, j, slack), sorted
    certificate: str = CERT_NONE
    min_slack: float = float("inf")

    @property
    def holds(self) -> bool:
        return self.verdict != FAILS


def _require_complete(table: ChainTable):
    if not table.complete:
        raise IncompleteTableError("chain table must cover every supplier subset")


def check_submodular(table: ChainTable, tau: float | None = None, certificate: str = CERT_NONE):
    """Test ``P(S) - P(S-i) <= P(S-j) - P(S-i-j)`` for every ``S`` and ``i != j`` in ``S``.

    ``slack = rhs - lhs``.  The verdict fails iff some slack is below ``-tau``;
    slacks in ``[-tau, 0)`` give holds-within-tolerance and are listed too.
    """
    _require_complete(table)
    tau = table.tau if tau is None else tau
    P = table.value
    floor = 1e-9 * max(1.0, abs(P(table.full)))  # solver noise, not a violation
    worst = float("inf")
    fails, near = [], []
    for S in table.subsets():
        for i, j in itertools.combinations(sorted(S), 2):
            lhs = P(S) - P(S - {i})
            rhs = P(S - {j}) - P(S - {i, j})
            slack = rhs - lhs
            worst = min(worst, slack)
            if slack < -tau:
                fails.append((S, i, j, slack))
            elif slack < -floor:
                near.append((S, i, j, slack))
    key = lambda v: (len(v[0]), sorted(v[0]), v[1], v[2])
    if fails:
        return SubmodularityReport(FAILS, sorted(fails, key=key), certificate, worst)
    if near:
        return SubmodularityReport(HOLDS_TOL, sorted(near, key=key), certificate, worst)
    return SubmodularityReport(HOLDS, [], certificate, worst)


def check_telescoping(table: ChainTable):
    """Slacks of ``P(N) - P(S) >= sum_{i not in S} (P(N) - P(N - i))`` for every ``S``."""
    _require_complete(table)
    N = table.full
    P = table.value
    m = marginal_contributions(table)
    out = []
    for S in table.subsets():
        out.append((S, (P(N) - P(S)) - sum(m[i] for i in N - S)))
    return out


def marginal_contributions(table: ChainTable) -> np.ndarray:
    """``P(N) - P(N - i)`` for each supplier."""
    _require_complete(table)
    N = table.full
    return np.array([table.value(N) - table.value(N - {i}) for i in range(table.n)])


def contributing_set(table: ChainTable, tau: float | None = None) -> frozenset:
    """Suppliers whose removal lowers the optimal chain profit by more than ``tau``."""
    tau = table.tau if tau is None else tau
    return frozenset(int(i) for i in np.flatnonzero(marginal_contributions(table) > tau))


def contributing_set_minus(table: ChainTable, i: int, tau: float | None = None) -> frozenset:
    """Contributing suppliers of the reduced market ``N - i``."""
    _require_complete(table)
    tau = table.tau if tau is None else tau
    R = table.full - {i}
    return frozenset(j for j in R if table.value(R) > table.value(R - {j}) + tau)


def check_support_uniqueness(scenario: Scenario, table: ChainTable, perturbations: int = 6,
                             scale: float = 0.25, seed: int = 0, tau: float | None = None):
    """Advisory test that every subset's optimum has a unique support.

    Each subset is re-solved from perturbed starts; a subset is flagged when
    some restart reaches the optimal value (within ``tau``) with a different
    support, where a coordinate counts as used when it exceeds ``tau * d_bar``.
    Returns ``{S: bool}``.
    """
    tau = table.tau if tau is None else tau
    rng = np.random.default_rng(seed)
    caps = scenario.caps
    cut = tau * scenario.d_bar
    out = {}
    for S in subsets_in_order(scenario.n):
        base = table[S]
        support = frozenset(np.flatnonzero(base.t > cut).tolist())
        idx = sorted(S)
        starts = [np.zeros(scenario.n)]
        for k in idx:
            s = np.zeros(scenario.n)
            s[k] = caps[k]
            starts.append(s)
        for _ in range(perturbations):
            s = np.zeros(scenario.n)
            s[idx] = np.clip(base.t[idx] + scale * caps[idx] * rng.uniform(-1, 1, len(idx)),
                             0, caps[idx])
            starts.append(s)
        unique = True
        for s in starts:
            sol = solve_chain(scenario, S, start=s)
            alt = frozenset(np.flatnonzero(sol.t > cut).tolist())
            if sol.value >= base.value - tau and alt != support:
                unique = False
                break
        out[S] = unique
    return out


def certify(scenario: Scenario) -> str:
    """Sufficient condition for submodularity read off the scenario's curves."""
    if scenario.n == 2:
        return CERT_TWO
    if all(s.exec_cost.is_constant and s.res_cost.is_nondecreasing for s in scenario.suppliers):
        return CERT_SCREENING
    return CERT_NONE
