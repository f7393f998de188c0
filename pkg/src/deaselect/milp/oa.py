"""Outer approximation for separable convex quadratic objectives.

Each term ``w * (a - e)**2`` is replaced by ``w * t`` with ``t >= 0`` kept
above tangent lines of the parabola. The MILP master is re-solved, tangents
are added where ``t`` under-estimates the square, and the loop stops once
the master's bound meets the best true objective or no term is violated by
more than ``CUT_TOL``.

If the caller can solve the continuous problem for fixed binaries (the
subproblem), tangents are also placed at that solution; the loop then ends
after finitely many rounds instead of creeping towards the optimum.
"""

from __future__ import annotations

import logging
import math
import time
from typing import Callable, Sequence

import numpy as np

from .bnb import DEFAULT_GAP, TIE_TOL, solve_milp
from .model import MilpModel, SolveOutcome, Status

log = logging.getLogger(__name__)

CUT_TOL = 1e-7
INITIAL_POINTS = (0.0, 0.5, 1.0)

# subproblem(x) -> (true objective with x's binaries fixed, value of each quad term's expression)
Subproblem = Callable[[np.ndarray], "tuple[float, Sequence[float]]"]


def _add_tangent(model, term, t_idx, point):
    # (a - e)^2 >= d^2 - 2 d (e - e0),  d = a - e0
    d = term.target - point
    terms = {t_idx: 1.0}
    for j, a in zip(term.index, term.coef):
        terms[int(j)] = terms.get(int(j), 0.0) + 2.0 * d * a
    rhs = d * d + 2.0 * d * point - 2.0 * d * term.const
    model.add_constraint(terms, ">=", rhs, name=f"oa_{t_idx}_{len(model.constraints)}")


def solve_convex_miqp(
    model: MilpModel,
    incumbent=None,
    time_limit: float | None = None,
    gap_tol: float = DEFAULT_GAP,
    max_rounds: int = 200,
    subproblem: Subproblem | None = None,
) -> SolveOutcome:
    """Minimise a linear + separable convex quadratic objective over binaries.

    The returned ``x`` is the master point whose binaries achieved the best
    objective; with a ``subproblem`` the reported objective is the
    subproblem's value for those binaries.
    """
    if not model.quad_terms:
        return solve_milp(model, incumbent=incumbent, time_limit=time_limit, gap_tol=gap_tol)
    if model.sense != "min":
        raise ValueError("convex quadratic objectives must be minimised")
    start = time.monotonic()
    deadline = None if time_limit is None else start + time_limit
    n = model.num_vars

    master = model.copy()
    master.quad_terms = []
    t_vars = [master.add_var(f"__oa_t{i}", lb=0.0) for i in range(len(model.quad_terms))]
    lin = dict(zip(model.obj_index.tolist(), model.obj_coef.tolist()))
    for t, term in zip(t_vars, model.quad_terms):
        lin[t] = lin.get(t, 0.0) + term.weight
    master.set_objective(lin, sense="min", constant=model.obj_constant)
    points = [set(INITIAL_POINTS) for _ in t_vars]
    for t, term, pts in zip(t_vars, model.quad_terms, points):
        for pt in sorted(pts):
            _add_tangent(master, term, t, pt)

    bins = model.binaries
    warm = None
    if incumbent is not None:
        warm = _binaries_of(model, incumbent)
    best_x, best_val, best_key = None, math.inf, None
    lower = -math.inf
    nodes = 0
    status = Status.OPTIMAL
    for rnd in range(max_rounds):
        remaining = None if deadline is None else max(0.0, deadline - time.monotonic())
        out = solve_milp(master, incumbent=warm, time_limit=remaining, gap_tol=gap_tol / 2)
        nodes += out.nodes
        if out.status is Status.INFEASIBLE:
            if best_x is None:
                return SolveOutcome(Status.INFEASIBLE, nodes=nodes, wall_time=time.monotonic() - start)
            break
        if not out.has_solution:
            status = out.status
            break
        if out.status is Status.OPTIMAL:
            lower = max(lower, out.bound if math.isfinite(out.bound) else out.objective)
        x = out.x
        sub_points = None
        if subproblem is not None:
            true_val, sub_points = subproblem(x[:n])
        else:
            true_val = model.objective_value(x[:n])
        key = tuple(int(round(x[j])) for j in model.tie_break)
        if true_val < best_val - TIE_TOL or (abs(true_val - best_val) <= TIE_TOL and key > best_key):
            best_x, best_val, best_key = x[:n].copy(), true_val, key
        warm = {master.variables[j].name: float(round(best_x[j])) for j in bins}
        if out.status is Status.TIME_LIMIT:
            status = Status.TIME_LIMIT
            break
        worst = 0.0
        added = 0
        for i, (t, term) in enumerate(zip(t_vars, model.quad_terms)):
            e = term.expr_value(x)
            viol = (term.target - e) ** 2 - x[t]
            worst = max(worst, viol)
            cands = [e] if viol > CUT_TOL else []
            if sub_points is not None:
                cands.append(float(sub_points[i]))
            for pt in cands:
                if all(abs(pt - q) > 1e-12 for q in points[i]):
                    points[i].add(pt)
                    _add_tangent(master, term, t, pt)
                    added += 1
        log.debug("oa round %d: lb=%.10g ub=%.10g viol=%.3g cuts=%d", rnd, lower, best_val, worst, added)
        if best_val - lower <= max(TIE_TOL, gap_tol * max(1.0, abs(best_val))):
            break
        if worst < CUT_TOL and subproblem is None:
            break
        if added == 0:
            break
        if deadline is not None and time.monotonic() > deadline:
            status = Status.TIME_LIMIT
            break
    else:
        status = Status.TIME_LIMIT

    res = SolveOutcome(status, nodes=nodes, wall_time=time.monotonic() - start)
    res.x = best_x
    res.objective = best_val
    res.values = model.values_dict(best_x)
    res.bound = lower
    scale = max(1.0, abs(best_val))
    res.gap = max(0.0, best_val - lower) / scale if math.isfinite(lower) else math.inf
    if status is Status.OPTIMAL and res.gap > gap_tol:
        log.warning("outer approximation stalled with gap %.3g", res.gap)
    return res


def _binaries_of(model, incumbent):
    if isinstance(incumbent, dict):
        return {k: v for k, v in incumbent.items() if model.variables[model.var_index(k)].is_binary}
    arr = np.asarray(incumbent, dtype=float)
    return {model.variables[j].name: float(arr[j]) for j in model.binaries}
