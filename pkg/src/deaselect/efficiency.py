"""CRS input-oriented multiplier DEA.

For DMU ``k`` and an active set of inputs and outputs the efficiency is

    max  sum_o beta_o y_o^k
    s.t. sum_o beta_o y_o^j - sum_i alpha_i x_i^j <= 0   for every DMU j
         sum_i alpha_i x_i^k = 1
         alpha, beta >= 0

Indices of inputs and outputs are 0-based throughout the library.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import NormalizationInfeasible, SolverError
from .milp import MilpModel, Status, solve_lp
from .milp.simplex import LPStatus, SimplexEngine


@dataclass(frozen=True)
class ActiveSet:
    """Outputs and inputs that may carry weight; ``inputs=None`` means all."""

    outputs: tuple[int, ...]
    inputs: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "outputs", tuple(sorted(int(o) for o in self.outputs)))
        if self.inputs is not None:
            ins = tuple(sorted(int(i) for i in self.inputs))
            if not ins:
                raise ValueError("an active set needs at least one input")
            object.__setattr__(self, "inputs", ins)

    @classmethod
    def full(cls, d: Dataset) -> "ActiveSet":
        return cls(tuple(range(d.O)), tuple(range(d.I)))

    def input_list(self, d: Dataset) -> tuple[int, ...]:
        return tuple(range(d.I)) if self.inputs is None else self.inputs

    def validate(self, d: Dataset):
        for o in self.outputs:
            if not 0 <= o < d.O:
                raise IndexError(f"output index {o} outside 0..{d.O - 1}")
        for i in self.input_list(d):
            if not 0 <= i < d.I:
                raise IndexError(f"input index {i} outside 0..{d.I - 1}")


def _as_active(d, active):
    if active is None:
        return ActiveSet.full(d)
    if not isinstance(active, ActiveSet):
        active = ActiveSet(tuple(active))
    active.validate(d)
    return active


def _check_normalization(d, k, inputs):
    if not np.any(d.inputs[k, list(inputs)] > 0):
        raise NormalizationInfeasible(f"DMU {d.dmu_ids[k]}: every active input is zero")


def build_dea_lp(d: Dataset, k: int, active=None, weight_bounds=None) -> MilpModel:
    """The multiplier LP of DMU ``k`` restricted to ``active``.

    ``weight_bounds`` maps an output index to ``(lower, upper)`` bounds on
    its weight; unlisted outputs keep ``[0, inf)``.
    """
    active = _as_active(d, active)
    ins = active.input_list(d)
    _check_normalization(d, k, ins)
    m = MilpModel(f"dea_{d.dmu_ids[k]}")
    alpha = {i: m.add_var(f"alpha_{i}") for i in ins}
    beta = {}
    for o in active.outputs:
        lo, hi = (weight_bounds or {}).get(o, (0.0, np.inf))
        beta[o] = m.add_var(f"beta_{o}", lb=lo, ub=hi)
    for j in range(d.K):
        terms = {beta[o]: d.outputs[j, o] for o in active.outputs if d.outputs[j, o] != 0}
        terms.update({alpha[i]: -d.inputs[j, i] for i in ins if d.inputs[j, i] != 0})
        if terms:
            m.add_constraint(terms, "<=", 0.0, name=f"frontier_{j}")
    m.add_constraint({alpha[i]: d.inputs[k, i] for i in ins if d.inputs[k, i] != 0}, "=", 1.0, name="normalize")
    m.set_objective({beta[o]: d.outputs[k, o] for o in active.outputs}, sense="max")
    return m


def efficiency(d: Dataset, k: int, active=None, weight_bounds=None) -> float:
    """Efficiency of DMU ``k``; 0 when no output is active."""
    active = _as_active(d, active)
    if not active.outputs:
        _check_normalization(d, k, active.input_list(d))
        return 0.0
    out = solve_lp(build_dea_lp(d, k, active, weight_bounds))
    if out.status is not Status.OPTIMAL:
        raise SolverError(f"DMU {d.dmu_ids[k]}: DEA LP ended {out.status}")
    return float(out.objective)


class DeaEvaluator:
    """Efficiencies for many active sets on one dataset.

    One simplex engine per DMU holds every input and output column;
    switching active sets only changes column bounds, and each solve
    warm-starts from that DMU's previous basis. Results are memoised, so
    repeated queries for the same set cost nothing.
    """

    def __init__(self, d: Dataset):
        self.d = d
        self._engines: dict[int, SimplexEngine] = {}
        self._basis: dict[int, object] = {}
        self._memo: dict[tuple, float] = {}
        self.solves = 0

    def _engine(self, k):
        eng = self._engines.get(k)
        if eng is None:
            d = self.d
            A = np.hstack([-d.inputs, d.outputs])
            A = np.vstack([A, np.concatenate([d.inputs[k], np.zeros(d.O)])])
            senses = ["<="] * d.K + ["="]
            b = np.zeros(d.K + 1)
            b[-1] = 1.0
            c = -np.concatenate([np.zeros(d.I), d.outputs[k]])
            n = d.I + d.O
            eng = SimplexEngine(A, senses, b, c, np.zeros(n), np.full(n, np.inf))
            self._engines[k] = eng
        return eng

    def efficiency(self, k: int, active=None, weight_bounds=None) -> float:
        """Efficiency of DMU ``k``; NaN when weight bounds make the LP infeasible."""
        d = self.d
        active = _as_active(d, active)
        ins = active.input_list(d)
        _check_normalization(d, k, ins)
        if not active.outputs:
            return 0.0
        wb = weight_bounds or {}
        key = (k, active.outputs, tuple(ins), tuple(sorted(wb.items())))
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        eng = self._engine(k)
        on_in = set(ins)
        for i in range(d.I):
            eng.set_bounds(i, 0.0, np.inf if i in on_in else 0.0)
        on_out = set(active.outputs)
        for o in range(d.O):
            lo, hi = wb.get(o, (0.0, np.inf)) if o in on_out else (0.0, 0.0)
            eng.set_bounds(d.I + o, lo, hi)
        res = eng.solve(self._basis.get(k))
        self.solves += 1
        if res.status is LPStatus.INFEASIBLE:
            self._basis.pop(k, None)
            value = float("nan")
        elif res.status is LPStatus.OPTIMAL:
            self._basis[k] = res.basis
            value = float(-res.objective)
        else:
            raise SolverError(f"DMU {d.dmu_ids[k]}: DEA LP ended {res.status.value}")
        self._memo[key] = value
        return value

    def efficiencies(self, active=None, weight_bounds=None) -> np.ndarray:
        return np.array([self.efficiency(k, active, weight_bounds) for k in range(self.d.K)])


def all_efficiencies(d: Dataset, active=None, weight_bounds=None, evaluator: DeaEvaluator | None = None) -> np.ndarray:
    """Efficiencies of every DMU under ``active``, in DMU order."""
    ev = evaluator or DeaEvaluator(d)
    out = np.empty(d.K)
    for k in range(d.K):
        try:
            out[k] = ev.efficiency(k, active, weight_bounds)
        except (NormalizationInfeasible, SolverError) as exc:
            raise type(exc)(f"DMU {d.dmu_ids[k]} (index {k}): {exc}") from exc
    return out
