"""Brute-force reference solutions.

Every admissible subset is scored with plain DEA LPs; nothing here touches
branch-and-bound, so agreement with the MILP layer is a real check.
"""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from .config import SelectionConfig
from .data import Dataset, correlation_matrix, threshold_rule_matrix
from .efficiency import ActiveSet, DeaEvaluator
from .errors import CapExceeded, StructurallyInfeasible
from .milp import SolveOutcome, Status
from .selection import SelectionSolution

DEFAULT_CAP = 100_000
TIE_TOL = 1e-9


def _admissible(S: tuple[int, ...], cfg: SelectionConfig, conflicts: set[tuple[int, int]]) -> bool:
    chosen = set(S)
    for o, (lo, _) in cfg.weight_bounds.items():
        if lo > 0 and o not in chosen:
            return False
    if cfg.costs is not None and sum(cfg.costs[o] for o in S) > cfg.budget + 1e-9:
        return False
    for cl in cfg.clusters:
        n = sum(1 for o in cl.members if o in chosen)
        if n < cl.p_min or n > cl.p_max:
            return False
    for a, b in conflicts:
        if a in chosen and b in chosen:
            return False
    return True


def _conflicts(d, cfg):
    pairs = {tuple(sorted(pq)) for pq in cfg.conflict_pairs}
    if cfg.corr_tau is not None:
        R = threshold_rule_matrix(correlation_matrix(d), cfg.corr_tau)
        pairs |= {(a, b) for a in range(d.O) for b in range(a + 1, d.O) if R[a, b]}
    return pairs


def _score(e: np.ndarray, cfg: SelectionConfig, w: np.ndarray, count: int) -> float:
    """Objective as a number to maximise (the quadratic loss is negated)."""
    if cfg.objective == "average":
        return float(e.sum() / len(e))
    if cfg.objective == "weighted":
        return float((w * e).sum() / len(e))
    if cfg.objective == "quadratic":
        return -float(((1.0 - e) ** 2).sum() / len(e))
    if cfg.objective == "min":
        return float(e.min())
    if cfg.objective == "percentile":
        return float(sorted(e, reverse=True)[count - 1])
    raise ValueError(cfg.objective)


def enumerate_best(
    d: Dataset,
    cfg: SelectionConfig,
    mode: str = "joint",
    dmu: int | None = None,
    cap: int = DEFAULT_CAP,
    evaluator: DeaEvaluator | None = None,
) -> SelectionSolution:
    """Exact optimum by trying every admissible output (and input) subset.

    Subsets are visited in lexicographic order and only a strictly better
    score replaces the incumbent, so ties resolve to the smallest set.
    """
    cfg.validate(d.K, d.I, d.O)
    start = time.monotonic()
    n_out = math.comb(d.O, cfg.p)
    n_in = math.comb(d.I, cfg.p_tilde) if cfg.p_tilde is not None else 1
    if n_out * n_in > cap:
        raise CapExceeded(n_out * n_in, cap)
    if mode == "individual":
        if dmu is None:
            raise ValueError("individual mode needs a DMU index")
        scope = [dmu]
    else:
        scope = list(range(d.K))
    w = np.asarray(cfg.weights, dtype=float)[scope] if cfg.objective == "weighted" else np.ones(len(scope))
    count = 1 if mode == "individual" else (cfg.percentile_count(d.K) if cfg.objective == "percentile" else 0)
    conflicts = _conflicts(d, cfg)
    ev = evaluator or DeaEvaluator(d)
    wb = cfg.weight_bounds or None
    in_sets = list(itertools.combinations(range(d.I), cfg.p_tilde)) if cfg.p_tilde is not None else [None]

    best = None
    visited = 0
    for S in itertools.combinations(range(d.O), cfg.p):
        if not _admissible(S, cfg, conflicts):
            continue
        for T in in_sets:
            if T is not None and any(not np.any(d.inputs[k, list(T)] > 0) for k in scope):
                continue
            visited += 1
            active = ActiveSet(S, T)
            e = np.array([ev.efficiency(k, active, wb) for k in scope])
            if np.any(np.isnan(e)):
                continue
            score = _score(e, cfg, w, count)
            if best is None or score > best[0] + TIE_TOL:
                best = (score, S, T)
    if best is None:
        raise StructurallyInfeasible("no admissible subset satisfies every constraint (enumeration)")

    score, S, T = best
    effs = ev.efficiencies(ActiveSet(S, T), wb)
    value = -score if cfg.objective == "quadratic" else score
    out = SolveOutcome(Status.OPTIMAL, objective=value, gap=0.0, nodes=visited, wall_time=time.monotonic() - start)
    out.bound = value
    return SelectionSolution(S, T, effs, value, out, mode, dmu, value)


def single_input_p1_value(d: Dataset, k: int) -> tuple[int, float]:
    """Best single output for DMU ``k`` by the ratio formula (one input only).

    With one input and one output the efficiency is the DMU's
    output/input ratio over the best ratio in the sample; the best output
    is the one maximising that. Ties go to the lowest output index.
    """
    if d.I != 1:
        raise ValueError("the closed form needs exactly one input")
    x = d.inputs[:, 0]
    if np.any(x <= 0):
        raise ValueError("the closed form needs strictly positive inputs")
    ratios = d.outputs / x[:, None]
    best_o, best_v = 0, -1.0
    for o in range(d.O):
        top = ratios[:, o].max()
        v = ratios[k, o] / top if top > 0 else 0.0
        if v > best_v:
            best_o, best_v = o, float(v)
    return best_o, best_v
