"""Choosing which outputs (and optionally inputs) enter the DEA model.

Two settings are covered. In the individual setting one DMU picks the
``p`` outputs that maximise its own efficiency. In the joint setting one
output set is shared by all DMUs and scored by an objective over the whole
efficiency vector. Both are written as mixed-binary programs: a binary
``z_o`` per output gates the weights ``beta_o`` of every DMU block through
``beta_o <= u_o z_o``.

Indices are 0-based; the CLI and config files translate from 1-based.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .config import SelectionConfig
from .data import Dataset, EfficiencySummary, correlation_matrix, summarize, threshold_rule_matrix
from .efficiency import ActiveSet, DeaEvaluator
from .errors import ConsistencyError, DeaError, NormalizationInfeasible, SolverError, StructurallyInfeasible
from .greedy import GreedyTrace, greedy_nested
from .milp import INT_TOL, InvalidIncumbent, MilpModel, SolveOutcome, Status, solve_convex_miqp, solve_milp

log = logging.getLogger(__name__)

CONSISTENCY_TOL = 1e-6


class SelectionModel(MilpModel):
    """A MilpModel that remembers where the selection variables live."""

    def __init__(self, name, mode, dmus):
        super().__init__(name)
        self.mode = mode
        self.dmus = list(dmus)
        self.z: list[int] = []
        self.z_tilde: list[int] = []
        self.eff: list[dict[int, float]] = []  # efficiency of each DMU as a linear expression


@dataclass(frozen=True)
class OutputBounds:
    upper: np.ndarray  # cap on beta_o for this DMU; 0 means fixed at 0
    zero_forcible: np.ndarray  # z_o may be fixed to 0 without losing optimality


def tightened_output_bounds(d: Dataset, k: int, p: int | None = None) -> OutputBounds:
    """Caps ``beta_o <= 1 / y_o`` implied by the DMU's own frontier row.

    Outputs the DMU does not produce get a cap of 0. Their selection
    binary can be fixed to 0 only if the DMU still has ``p`` produced
    outputs to pick from.
    """
    y = d.outputs[k]
    pos = y > 0
    upper = np.zeros(d.O)
    upper[pos] = 1.0 / y[pos]
    forcible = ~pos if p is not None and int(pos.sum()) >= p else np.zeros(d.O, dtype=bool)
    return OutputBounds(upper, forcible)


def conflict_pairs(d: Dataset, cfg: SelectionConfig) -> list[tuple[int, int]]:
    """Output pairs that may not be selected together."""
    pairs = {tuple(sorted(pq)) for pq in cfg.conflict_pairs}
    if cfg.corr_tau is not None:
        R = threshold_rule_matrix(correlation_matrix(d), cfg.corr_tau)
        for o, o2 in zip(*np.nonzero(np.triu(R, 1))):
            pairs.add((int(o), int(o2)))
    return sorted(pairs)


def check_structure(d: Dataset, cfg: SelectionConfig) -> None:
    """Reject configurations whose counting arithmetic rules out every selection."""
    cfg.validate(d.K, d.I, d.O)
    p = cfg.p
    forced = sorted(o for o, (lo, _) in cfg.weight_bounds.items() if lo > 0)
    if len(forced) > p:
        raise StructurallyInfeasible(f"#(L_o>0) = {len(forced)} > p = {p}: positive lower weight bounds force too many outputs")
    if cfg.clusters:
        for cl in cfg.clusters:
            if cl.p_min > len(cl.members):
                raise StructurallyInfeasible(f"cluster {cl.name}: pmin = {cl.p_min} > size {len(cl.members)}")
        smin = sum(cl.p_min for cl in cfg.clusters)
        smax = sum(min(cl.p_max, len(cl.members)) for cl in cfg.clusters)
        if smin > p:
            raise StructurallyInfeasible(f"sum of cluster pmin = {smin} > p = {p}")
        if smax < p:
            raise StructurallyInfeasible(f"sum of cluster pmax = {smax} < p = {p}")
        for cl in cfg.clusters:
            inside = sum(1 for o in forced if o in cl.members)
            if inside > cl.p_max:
                raise StructurallyInfeasible(f"cluster {cl.name}: {inside} outputs forced by lower bounds > pmax = {cl.p_max}")
    if cfg.costs is not None:
        c = np.asarray(cfg.costs, dtype=float)
        rest = np.sort(np.delete(c, forced))
        cheapest = float(c[forced].sum() + rest[: p - len(forced)].sum())
        if cheapest > cfg.budget + 1e-9:
            raise StructurallyInfeasible(f"cheapest feasible {p}-subset costs {cheapest:g} > budget C = {cfg.budget:g}")
    pairs = set(conflict_pairs(d, cfg))
    for a in forced:
        for b in forced:
            if (a, b) in pairs:
                raise StructurallyInfeasible(f"outputs {a + 1} and {b + 1} are both forced but conflict")
    if cfg.p_tilde is not None:
        # some p_tilde-subset of inputs must keep every DMU's normalisation satisfiable
        for k in range(d.K):
            if np.count_nonzero(d.inputs[k] > 0) == 0:
                raise NormalizationInfeasible(f"DMU {d.dmu_ids[k]}: every input is zero")


# -- model building ------------------------------------------------------

def _input_cap(d, k, i, cfg):
    x = d.inputs[k, i]
    if cfg.tighten and x > 0:
        return min(cfg.big_m, 1.0 / x)
    return cfg.big_m


def _add_dmu_block(m: SelectionModel, d: Dataset, k: int, cfg: SelectionConfig, z, zt):
    """Weights, frontier rows, normalisation and linking for DMU ``k``."""
    tight = tightened_output_bounds(d, k)
    alpha = {}
    for i in range(d.I):
        if zt:
            cap = _input_cap(d, k, i, cfg)
            alpha[i] = m.add_var(f"alpha_{k}_{i}", ub=cap)
            m.add_constraint({alpha[i]: 1.0, zt[i]: -cap}, "<=", 0.0, name=f"link_in_{k}_{i}")
        else:
            alpha[i] = m.add_var(f"alpha_{k}_{i}")
    beta = {}
    for o in range(d.O):
        y = d.outputs[k, o]
        lo, hi = cfg.weight_bounds.get(o, (0.0, math.inf))
        if y == 0 and lo == 0:
            continue  # weight 0 is optimal: no objective gain, frontier rows only tighten
        if o in cfg.weight_bounds:
            cap = min(hi, tight.upper[o]) if y > 0 else hi
            if not math.isfinite(cap):
                cap = cfg.big_m
        else:
            cap = min(cfg.big_m, tight.upper[o]) if cfg.tighten else cfg.big_m
        beta[o] = m.add_var(f"beta_{k}_{o}", ub=cap)
        m.add_constraint({beta[o]: 1.0, z[o]: -cap}, "<=", 0.0, name=f"link_{k}_{o}")
        if lo > 0:
            m.add_constraint({beta[o]: 1.0, z[o]: -lo}, ">=", 0.0, name=f"lower_{k}_{o}")
    for j in range(d.K):
        terms = {beta[o]: d.outputs[j, o] for o in beta if d.outputs[j, o] != 0}
        terms.update({alpha[i]: -d.inputs[j, i] for i in alpha if d.inputs[j, i] != 0})
        if any(v > 0 for v in terms.values()):
            m.add_constraint(terms, "<=", 0.0, name=f"frontier_{k}_{j}")
    norm = {alpha[i]: d.inputs[k, i] for i in alpha if d.inputs[k, i] != 0}
    if not norm:
        raise NormalizationInfeasible(f"DMU {d.dmu_ids[k]}: every input is zero")
    m.add_constraint(norm, "=", 1.0, name=f"normalize_{k}")
    m.eff.append({beta[o]: d.outputs[k, o] for o in beta if d.outputs[k, o] != 0})


def _add_selection_vars(m, d, cfg):
    m.z = [m.add_var(f"z_{o}", binary=True) for o in range(d.O)]
    m.add_constraint({v: 1.0 for v in m.z}, "=", cfg.p, name="card_out")
    if cfg.p_tilde is not None:
        m.z_tilde = [m.add_var(f"zt_{i}", binary=True) for i in range(d.I)]
        m.add_constraint({v: 1.0 for v in m.z_tilde}, "=", cfg.p_tilde, name="card_in")
    m.tie_break = list(m.z) + list(m.z_tilde)


def build_osdea_individual(d: Dataset, k: int, cfg: SelectionConfig) -> SelectionModel:
    """Best ``p`` outputs for DMU ``k`` alone (plus ``p_tilde`` inputs if set)."""
    check_structure(d, cfg)
    if not 0 <= k < d.K:
        raise IndexError(f"DMU index {k} outside 0..{d.K - 1}")
    m = SelectionModel(f"individual_{d.dmu_ids[k]}", "individual", [k])
    _add_selection_vars(m, d, cfg)
    _add_dmu_block(m, d, k, cfg, m.z, m.z_tilde)
    if not cfg.has_extensions:
        forcible = tightened_output_bounds(d, k, cfg.p).zero_forcible
        for o in np.nonzero(forcible)[0]:
            m.set_bounds(m.z[o], 0.0, 0.0)
    apply_extensions(m, d, cfg)
    attach_objective(m, d, cfg)
    return m


def build_fsdea_individual(d: Dataset, k: int, cfg: SelectionConfig) -> SelectionModel:
    """Individual selection of outputs and inputs; ``cfg.p_tilde`` is required."""
    if cfg.p_tilde is None:
        raise ValueError("input selection needs p_tilde")
    pos = np.count_nonzero(d.inputs[k] > 0)
    if pos == 0:
        raise NormalizationInfeasible(f"DMU {d.dmu_ids[k]}: every input is zero")
    return build_osdea_individual(d, k, cfg)


def build_osdea_joint(d: Dataset, cfg: SelectionConfig) -> SelectionModel:
    """One output set shared by every DMU."""
    check_structure(d, cfg)
    m = SelectionModel("joint", "joint", range(d.K))
    _add_selection_vars(m, d, cfg)
    for k in range(d.K):
        _add_dmu_block(m, d, k, cfg, m.z, m.z_tilde)
    apply_extensions(m, d, cfg)
    attach_objective(m, d, cfg)
    return m


def apply_extensions(m: SelectionModel, d: Dataset, cfg: SelectionConfig) -> SelectionModel:
    """Forced outputs, cost budget, cluster limits and conflict pairs."""
    for o, (lo, _) in sorted(cfg.weight_bounds.items()):
        if lo > 0:
            m.set_bounds(m.z[o], 1.0, 1.0)
    if cfg.costs is not None:
        m.add_constraint({m.z[o]: float(c) for o, c in enumerate(cfg.costs)}, "<=", cfg.budget, name="cost")
    for n, cl in enumerate(cfg.clusters):
        terms = {m.z[o]: 1.0 for o in cl.members}
        m.add_constraint(terms, ">=", cl.p_min, name=f"cluster_min_{n}")
        m.add_constraint(terms, "<=", cl.p_max, name=f"cluster_max_{n}")
    for a, b in conflict_pairs(d, cfg):
        m.add_constraint({m.z[a]: 1.0, m.z[b]: 1.0}, "<=", 1.0, name=f"conflict_{a}_{b}")
    return m


def _weights_for(m, d, cfg):
    if cfg.objective != "weighted":
        return np.ones(len(m.dmus))
    return np.asarray(cfg.weights, dtype=float)[m.dmus]


def attach_objective(m: SelectionModel, d: Dataset, cfg: SelectionConfig) -> SelectionModel:
    """Set the objective over the DMU efficiency expressions in ``m.eff``.

    In the individual setting the same formulas apply to a population of
    one DMU; the percentile count is then 1.
    """
    n = len(m.eff)
    kind = cfg.objective
    if kind in ("average", "weighted"):
        w = _weights_for(m, d, cfg)
        terms: dict[int, float] = {}
        for wk, e in zip(w, m.eff):
            for j, a in e.items():
                terms[j] = terms.get(j, 0.0) + wk * a / n
        m.set_objective(terms, sense="max")
    elif kind == "quadratic":
        m.set_objective({}, sense="min")
        for e in m.eff:
            m.add_quad_term(e, target=1.0, weight=1.0 / n)
    elif kind == "min":
        lam = m.add_var("lambda", 0.0, 1.0)
        for k, e in zip(m.dmus, m.eff):
            m.add_constraint({lam: 1.0, **{j: -a for j, a in e.items()}}, "<=", 0.0, name=f"floor_{k}")
        m.set_objective({lam: 1.0}, sense="max")
    elif kind == "percentile":
        count = cfg.percentile_count(d.K) if m.mode == "joint" else 1
        lam = m.add_var("lambda", 0.0, 1.0)
        deltas = []
        for k, e in zip(m.dmus, m.eff):
            dk = m.add_var(f"delta_{k}", binary=True)
            deltas.append(dk)
            # e_k >= lambda - (1 - delta_k)
            m.add_constraint({**e, lam: -1.0, dk: -1.0}, ">=", -1.0, name=f"reach_{k}")
        m.add_constraint({v: 1.0 for v in deltas}, "=", count, name="count")
        m.set_objective({lam: 1.0}, sense="max")
    else:
        raise ValueError(f"unknown objective {kind!r}")
    return m


# -- solving ---------------------------------------------------------------

def objective_of(effs, cfg: SelectionConfig, mode: str = "joint", dmu: int | None = None) -> float:
    """Objective value of an efficiency vector (all K DMUs)."""
    effs = np.asarray(effs, dtype=float)
    if mode == "individual":
        e = effs[[dmu]]
        w = np.asarray(cfg.weights, dtype=float)[[dmu]] if cfg.objective == "weighted" else np.ones(1)
        count = 1
    else:
        e = effs
        w = np.asarray(cfg.weights, dtype=float) if cfg.objective == "weighted" else np.ones(len(e))
        count = cfg.percentile_count(len(e)) if cfg.objective == "percentile" else 0
    if cfg.objective in ("average", "weighted"):
        return float(w @ e / len(e))
    if cfg.objective == "quadratic":
        return float(np.sum((1.0 - e) ** 2) / len(e))
    if cfg.objective == "min":
        return float(e.min())
    return float(np.sort(e)[::-1][count - 1])


@dataclass
class SelectionSolution:
    selected_outputs: tuple[int, ...]
    selected_inputs: tuple[int, ...] | None
    efficiencies: np.ndarray
    objective_value: float
    outcome: SolveOutcome
    mode: str = "joint"
    dmu: int | None = None
    solver_objective: float = math.nan
    greedy: GreedyTrace | None = None

    @property
    def optimal(self) -> bool:
        return self.outcome.status is Status.OPTIMAL

    @property
    def active(self) -> ActiveSet:
        return ActiveSet(self.selected_outputs, self.selected_inputs)


def _pick(x, idx, what):
    vals = x[idx]
    if np.any(np.abs(vals - np.round(vals)) > INT_TOL):
        raise SolverError(f"{what} binaries are not integral: {vals}")
    return tuple(int(i) for i, v in enumerate(vals) if v > 0.5)


def _greedy_incumbent(d, cfg, m, evaluator):
    trace = greedy_nested(d, cfg.p, cfg.objective, cfg.weights, evaluator=evaluator)
    chosen = set(trace.order)
    return trace, {m.variables[v].name: float(o in chosen) for o, v in enumerate(m.z)}


def _dea_subproblem(d, cfg, m, ev, mode, dmu):
    # with the binaries fixed, each DMU's best efficiency is its DEA LP value
    wb = cfg.weight_bounds or None

    def solve(x):
        outputs = _pick(x, m.z, "output")
        inputs = _pick(x, m.z_tilde, "input") if m.z_tilde else None
        effs = ev.efficiencies(ActiveSet(outputs, inputs), wb)
        return objective_of(effs, cfg, mode, dmu), effs[m.dmus]

    return solve


def solve_selection(
    d: Dataset,
    cfg: SelectionConfig,
    mode: str = "joint",
    dmu: int | None = None,
    warm_start: bool = True,
    evaluator: DeaEvaluator | None = None,
) -> SelectionSolution:
    """Build, solve and verify one selection problem.

    The joint average and weighted objectives start from the greedy nested
    selection. After solving, the efficiencies of the chosen set are
    recomputed with plain DEA LPs and compared with the solver's value.
    """
    start = time.monotonic()
    ev = evaluator or DeaEvaluator(d)
    if mode == "joint":
        m = build_osdea_joint(d, cfg)
    elif mode == "individual":
        if dmu is None:
            raise ValueError("individual mode needs a DMU index")
        m = build_osdea_individual(d, dmu, cfg)
    else:
        raise ValueError(f"mode must be 'joint' or 'individual', got {mode!r}")

    trace, incumbent = None, None
    if warm_start and mode == "joint" and cfg.objective in ("average", "weighted") and cfg.p_tilde is None:
        trace, incumbent = _greedy_incumbent(d, cfg, m, ev)
    # the time limit covers model building and the greedy start too
    remaining = max(0.0, cfg.time_limit - (time.monotonic() - start))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InvalidIncumbent)
        if m.quad_terms:
            out = solve_convex_miqp(
                m, incumbent=incumbent, time_limit=remaining, gap_tol=cfg.gap_tol,
                subproblem=_dea_subproblem(d, cfg, m, ev, mode, dmu),
            )
        else:
            out = solve_milp(m, incumbent=incumbent, time_limit=remaining, gap_tol=cfg.gap_tol)
    if out.status is Status.INFEASIBLE:
        raise StructurallyInfeasible("no selection satisfies every constraint (proved by branch-and-bound)")
    if not out.has_solution:
        raise SolverError(f"solver ended {out.status} without a feasible selection")

    outputs = _pick(out.x, m.z, "output")
    inputs = _pick(out.x, m.z_tilde, "input") if m.z_tilde else None
    wb = cfg.weight_bounds or None
    effs = ev.efficiencies(ActiveSet(outputs, inputs), wb)
    scope = m.dmus
    if np.any(np.isnan(effs[scope])):
        raise ConsistencyError("recomputed DEA LP is infeasible for the selected set")
    value = objective_of(effs, cfg, mode, dmu)
    if abs(value - out.objective) > CONSISTENCY_TOL * max(1.0, abs(value)):
        raise ConsistencyError(f"solver objective {out.objective:.12g} but recomputed efficiencies give {value:.12g}")
    # any feasible weights give at most the DEA optimum
    for k, e in zip(scope, m.eff):
        ek = sum(a * out.x[j] for j, a in e.items())
        if ek > effs[k] + CONSISTENCY_TOL:
            raise ConsistencyError(f"DMU {d.dmu_ids[k]}: solver efficiency {ek:.12g} exceeds DEA {effs[k]:.12g}")
    if m.quad_terms:
        master = m.objective_value(out.x)
        if value > master + CONSISTENCY_TOL * max(1.0, abs(value)):
            raise ConsistencyError(f"solver point scores {master:.12g}, better than the DEA value {value:.12g}")
    if cfg.objective in ("average", "weighted"):
        w = _weights_for(m, d, cfg)
        for wk, k, e in zip(w, scope, m.eff):
            if wk <= 0:
                continue
            ek = sum(a * out.x[j] for j, a in e.items())
            if abs(ek - effs[k]) > CONSISTENCY_TOL:
                raise ConsistencyError(f"DMU {d.dmu_ids[k]}: solver efficiency {ek:.12g} vs DEA {effs[k]:.12g}")
    return SelectionSolution(outputs, inputs, effs, value, out, mode, dmu, float(out.objective), trace)


@dataclass
class SweepRow:
    p: int
    solution: SelectionSolution | None = None
    summary: EfficiencySummary | None = None
    marginal: float | None = None  # v(p+1) - v(p)
    error: str | None = None
    error_kind: str | None = None
    exception: DeaError | None = None

    @property
    def value(self) -> float | None:
        return None if self.solution is None else self.solution.objective_value


def sweep_p(d: Dataset, cfg: SelectionConfig, p_values, mode: str = "joint", dmu: int | None = None) -> list[SweepRow]:
    """Solve for each ``p`` in ``p_values``; failures are recorded per row."""
    rows = []
    ev = DeaEvaluator(d)
    for p in p_values:
        row = SweepRow(int(p))
        try:
            sol = solve_selection(d, cfg.with_(p=int(p)), mode, dmu, evaluator=ev)
            row.solution = sol
            effs = sol.efficiencies if mode == "joint" else sol.efficiencies[[dmu]]
            row.summary = summarize(effs)
        except DeaError as exc:
            row.error = str(exc)
            row.error_kind = type(exc).__name__
            row.exception = exc
            log.warning("p=%d failed: %s", p, exc)
        rows.append(row)
    by_p = {r.p: r for r in rows}
    for r in rows:
        nxt = by_p.get(r.p + 1)
        if r.value is not None and nxt is not None and nxt.value is not None:
            r.marginal = nxt.value - r.value
    return rows
