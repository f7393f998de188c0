"""Nested forward selection of outputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .efficiency import ActiveSet, DeaEvaluator

TIE_TOL = 1e-9


@dataclass(frozen=True)
class GreedyTrace:
    """Outputs in the order they were added and the objective after each step."""

    order: tuple[int, ...]
    values: tuple[float, ...]
    efficiencies: np.ndarray  # under the final set

    def prefix(self, t: int) -> tuple[int, ...]:
        return tuple(sorted(self.order[:t]))


def linear_objective(effs: np.ndarray, objective: str, weights=None) -> float:
    if objective == "average":
        return float(np.mean(effs))
    if objective == "weighted":
        return float(np.dot(np.asarray(weights, dtype=float), effs) / len(effs))
    raise ValueError(f"greedy selection supports average and weighted objectives, not {objective!r}")


def greedy_nested(
    d: Dataset,
    p: int,
    objective: str = "average",
    weights=None,
    evaluator: DeaEvaluator | None = None,
) -> GreedyTrace:
    """Grow the output set one output at a time.

    Each step tries every unused output next to the outputs already chosen,
    evaluates all DMU efficiencies for that set, and keeps the best
    candidate; ties go to the lowest output index.
    """
    if not 1 <= p <= d.O:
        raise ValueError(f"p={p} outside 1..{d.O}")
    linear_objective(np.zeros(d.K), objective, weights if weights is not None else np.ones(d.K))
    ev = evaluator or DeaEvaluator(d)
    chosen: list[int] = []
    values: list[float] = []
    best_effs = None
    for _ in range(p):
        best = None
        for o in range(d.O):
            if o in chosen:
                continue
            effs = ev.efficiencies(ActiveSet(tuple(chosen + [o])))
            val = linear_objective(effs, objective, weights)
            if best is None or val > best[0] + TIE_TOL:
                best = (val, o, effs)
        chosen.append(best[1])
        values.append(best[0])
        best_effs = best[2]
    return GreedyTrace(tuple(chosen), tuple(values), best_effs)
