"""Individual versus joint selections: who would rather pick their own outputs."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import SelectionConfig
from .data import Dataset
from .efficiency import DeaEvaluator
from .errors import DeaError
from .selection import SelectionSolution, solve_selection

PREFER_TOL = 1e-6
N_BINS = 20


@dataclass
class CrossEfficiencyMatrix:
    """``delta[k, j]``: efficiency of DMU k under DMU j's own selection minus under the joint one."""

    delta: np.ndarray
    joint_selection: tuple[int, ...]
    individual_selections: list[tuple[int, ...]]
    joint: SelectionSolution
    individual: list[SelectionSolution]


@dataclass
class SupportProfile:
    pi: np.ndarray  # percentage of DMUs strictly preferring each individual selection
    counts: np.ndarray  # number of DMUs behind each percentage
    bins: np.ndarray  # 20 counts over [0,5), [5,10), ..., [95,100]

    @staticmethod
    def bin_starts() -> list[int]:
        return [5 * b for b in range(N_BINS)]


def _individual(args):
    d, cfg, k = args
    try:
        return solve_selection(d, cfg, "individual", k)
    except DeaError as exc:
        exc.subproblem = f"individual selection of DMU {d.dmu_ids[k]}"
        raise


def cross_efficiency(d: Dataset, cfg: SelectionConfig, workers: int | None = None) -> CrossEfficiencyMatrix:
    """Solve the joint problem and every DMU's individual problem, then compare.

    With ``workers > 1`` the individual problems run in separate processes;
    results are assembled in DMU order either way.
    """
    ev = DeaEvaluator(d)
    try:
        joint = solve_selection(d, cfg, "joint", evaluator=ev)
    except DeaError as exc:
        exc.subproblem = "joint selection"
        raise
    jobs = [(d, cfg, k) for k in range(d.K)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            ind = list(pool.map(_individual, jobs))
    else:
        ind = [_individual(job) for job in jobs]
    # column j holds every DMU's efficiency under DMU j's selection
    under = np.column_stack([s.efficiencies for s in ind])
    delta = under - joint.efficiencies[:, None]
    return CrossEfficiencyMatrix(delta, joint.selected_outputs, [s.selected_outputs for s in ind], joint, ind)


def support_profile(m: CrossEfficiencyMatrix | np.ndarray, tol: float = PREFER_TOL) -> SupportProfile:
    """Share of DMUs that strictly gain from each individual selection, binned by 5%."""
    delta = m.delta if isinstance(m, CrossEfficiencyMatrix) else np.asarray(m, dtype=float)
    K = delta.shape[0]
    counts = (delta > tol).sum(axis=0)
    pi = 100.0 * counts / K
    bins = np.zeros(N_BINS, dtype=int)
    for c in counts:
        # pi / 5 = 20 c / K, done in integers; 100% falls in the last bin
        bins[min((N_BINS * int(c)) // K, N_BINS - 1)] += 1
    return SupportProfile(pi, counts, bins)
