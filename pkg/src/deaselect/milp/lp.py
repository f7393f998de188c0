"""LP relaxation solves on a :class:`MilpModel`."""

from __future__ import annotations

import math
import time

import numpy as np

from .model import MilpModel, SolveOutcome, Status
from .simplex import LPStatus, SimplexEngine

_STATUS = {
    LPStatus.OPTIMAL: Status.OPTIMAL,
    LPStatus.INFEASIBLE: Status.INFEASIBLE,
    LPStatus.UNBOUNDED: Status.UNBOUNDED,
    LPStatus.TIME_LIMIT: Status.TIME_LIMIT,
}


def build_engine(model: MilpModel) -> SimplexEngine:
    """Simplex engine for ``model`` in minimisation form, binaries relaxed."""
    c, A, rel, b, lb, ub = model.arrays()
    if model.sense == "max":
        c = -c
    return SimplexEngine(A, rel, b, c, lb, ub)


def solve_lp(model: MilpModel, time_limit: float | None = None) -> SolveOutcome:
    """Solve the continuous relaxation of ``model`` (binaries in [0, 1])."""
    if model.quad_terms:
        raise ValueError("solve_lp takes linear models; use solve_convex_miqp")
    start = time.monotonic()
    deadline = None if time_limit is None else start + time_limit
    res = build_engine(model).solve(deadline=deadline)
    status = _STATUS[res.status]
    out = SolveOutcome(status=status, wall_time=time.monotonic() - start, nodes=0)
    out.nodes = 1
    if status is Status.OPTIMAL:
        x = res.x
        out.x = x
        out.objective = model.objective_value(x)
        out.bound = out.objective
        out.values = model.values_dict(x)
    elif status is Status.UNBOUNDED:
        out.objective = math.inf if model.sense == "max" else -math.inf
    return out


def lp_status(res) -> Status:
    return _STATUS[res.status]


def clip_binaries(model: MilpModel, x: np.ndarray) -> np.ndarray:
    x = x.copy()
    for j in model.binaries:
        x[j] = min(1.0, max(0.0, x[j]))
    return x
