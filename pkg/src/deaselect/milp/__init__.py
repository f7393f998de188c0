"""Self-contained LP / MILP / convex-MIQP solving."""

from .bnb import DEFAULT_GAP, InvalidIncumbent, solve_milp
from .lp import solve_lp
from .model import FEAS_TOL, INT_TOL, MilpModel, SolveOutcome, Status
from .oa import solve_convex_miqp
from .simplex import NumericalBreakdown

__all__ = [
    "DEFAULT_GAP",
    "FEAS_TOL",
    "INT_TOL",
    "InvalidIncumbent",
    "MilpModel",
    "NumericalBreakdown",
    "SolveOutcome",
    "Status",
    "solve_convex_miqp",
    "solve_lp",
    "solve_milp",
]
