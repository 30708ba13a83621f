"""Capacity games with supply-function bids: chain optimum, submodularity, equilibria."""
from .buyer import Bid, BidProfile, BuyerSolution, solve_buyer
from .chain import (ChainSolution, ChainTable, GeneralGame, Scenario, Supplier, solve_chain,
                    solve_chain_table, solve_general, solve_general_table)
from .curves import MarginalCurve, PowerMargin
from .demand import DemandModel
from .equilibrium import build_equilibrium, check_consistency, verify_equilibrium
from .setfunc import certify, check_submodular, contributing_set, marginal_contributions

__version__ = "0.1.0"
