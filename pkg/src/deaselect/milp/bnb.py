"""Best-first branch-and-bound over binary variables."""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .lp import build_engine
from .model import INT_TOL, MilpModel, SolveOutcome, Status
from .simplex import Basis, LPStatus

log = logging.getLogger(__name__)

DEFAULT_GAP = 1e-6
TIE_TOL = 1e-9


class InvalidIncumbent(UserWarning):
    """A warm-start incumbent violated the model and was ignored."""


@dataclass
class _Node:
    lo: np.ndarray
    hi: np.ndarray
    basis: Basis | None
    depth: int


class _Search:
    def __init__(self, model: MilpModel, time_limit, gap_tol, cutoff=None):
        self.model = model
        self.sign = -1.0 if model.sense == "max" else 1.0
        self.engine = build_engine(model)
        self.bins = np.array(model.binaries, dtype=int)
        self.pos = {int(j): i for i, j in enumerate(self.bins)}
        self.tie_pos = [self.pos[j] for j in model.tie_break if j in self.pos]
        lb = np.array([model.variables[j].lb for j in self.bins])
        ub = np.array([model.variables[j].ub for j in self.bins])
        self.root_lo = np.ceil(lb - INT_TOL).astype(np.int8)
        self.root_hi = np.floor(ub + INT_TOL).astype(np.int8)
        self.start = time.monotonic()
        self.deadline = None if time_limit is None else self.start + time_limit
        self.gap_tol = gap_tol
        self.inc_val = math.inf  # minimisation form
        self.inc_x = None
        self.inc_key = None
        if cutoff is not None:
            self.inc_val = self.sign * cutoff
        self.nodes = 0
        self.gap_floor = math.inf  # smallest bound among nodes closed by the gap rule

    # -- LP at a node -----------------------------------------------------
    def _apply(self, lo, hi):
        for i, j in enumerate(self.bins):
            self.engine.set_bounds(int(j), float(lo[i]), float(hi[i]))

    def _lp(self, lo, hi, basis, timed=True):
        self._apply(lo, hi)
        return self.engine.solve(basis, deadline=self.deadline if timed else None)

    def _key(self, zbin):
        return tuple(int(zbin[i]) for i in self.tie_pos)

    def _potential(self, lo, hi):
        return tuple(int(hi[i]) for i in self.tie_pos)

    def _scale(self):
        return max(1.0, abs(self.inc_val)) if math.isfinite(self.inc_val) else 1.0

    # -- incumbents -------------------------------------------------------
    def offer(self, lo, hi, basis, timed=True):
        """Solve with all binaries fixed; keep the point if it improves."""
        res = self._lp(lo, hi, basis, timed)
        if res.status is not LPStatus.OPTIMAL:
            return res
        val = self.sign * self.model.objective_value(res.x)
        key = self._key(lo)
        better = val < self.inc_val - TIE_TOL
        tie = abs(val - self.inc_val) <= TIE_TOL and (self.inc_key is None or key > self.inc_key)
        if better or tie:
            self.inc_val, self.inc_x, self.inc_key = val, res.x, key
        return res

    def warm_start(self, incumbent):
        """Accept a full point, or a binaries-only assignment to complete by LP."""
        model = self.model
        if isinstance(incumbent, dict):
            vals = {model.var_index(k): float(v) for k, v in incumbent.items()}
        else:
            arr = np.asarray(incumbent, dtype=float)
            vals = {j: float(arr[j]) for j in range(len(arr))}
        zb = []
        for j in self.bins:
            if int(j) not in vals:
                warnings.warn("incumbent lacks binary values; ignored", InvalidIncumbent, stacklevel=3)
                return
            v = vals[int(j)]
            if abs(v - round(v)) > INT_TOL:
                warnings.warn("incumbent has fractional binaries; ignored", InvalidIncumbent, stacklevel=3)
                return
            zb.append(int(round(v)))
        zb = np.array(zb, dtype=np.int8)
        if len(vals) == model.num_vars:
            x = np.array([vals[j] for j in range(model.num_vars)])
            if model.violations(x):
                warnings.warn("incumbent violates the model; ignored", InvalidIncumbent, stacklevel=3)
                return
        if np.any(zb < self.root_lo) or np.any(zb > self.root_hi):
            warnings.warn("incumbent violates binary bounds; ignored", InvalidIncumbent, stacklevel=3)
            return
        # a single fixed LP, completed even past the deadline so a timed-out
        # search still returns the supplied point
        res = self.offer(zb, zb, None, timed=False)
        if res.status is not LPStatus.OPTIMAL:
            warnings.warn("incumbent binaries admit no feasible completion; ignored", InvalidIncumbent, stacklevel=3)

    # -- main loop --------------------------------------------------------
    def run(self):
        heap = []
        seq = itertools.count()
        root = _Node(self.root_lo.copy(), self.root_hi.copy(), None, 0)
        if np.any(root.lo > root.hi):
            return self._finish(Status.INFEASIBLE, heap)
        heapq.heappush(heap, (-math.inf, next(seq), root))
        timed_out = False
        unbounded = False
        while heap:
            bound, _, node = heapq.heappop(heap)
            if self._prune(bound, node):
                continue
            if self.deadline is not None and time.monotonic() > self.deadline:
                heapq.heappush(heap, (bound, next(seq), node))
                timed_out = True
                break
            res = self._lp(node.lo, node.hi, node.basis)
            self.nodes += 1
            if res.status is LPStatus.TIME_LIMIT:
                heapq.heappush(heap, (bound, next(seq), node))
                timed_out = True
                break
            if res.status is LPStatus.INFEASIBLE:
                continue
            if res.status is LPStatus.UNBOUNDED:
                unbounded = True
                break
            val = self.sign * self.model.objective_value(res.x)
            if self._prune(val, node):
                continue
            zb = res.x[self.bins] if len(self.bins) else np.zeros(0)
            frac = np.abs(zb - np.round(zb))
            if not len(frac) or frac.max() <= INT_TOL:
                fixed = np.round(zb).astype(np.int8)
                self.offer(fixed, fixed, res.basis)
                # other completions of this node may tie and win on tie_break
                self._branch_integral(heap, seq, node, fixed, val, res.basis)
                continue
            i = int(np.argmax(frac))  # first index wins ties
            up_first = zb[i] >= 0.5
            kids = []
            for v in (1, 0) if up_first else (0, 1):
                lo, hi = node.lo.copy(), node.hi.copy()
                lo[i] = hi[i] = v
                kids.append(_Node(lo, hi, res.basis, node.depth + 1))
            for kid in kids:
                heapq.heappush(heap, (val, next(seq), kid))
        if unbounded:
            return self._finish(Status.UNBOUNDED, [])
        if timed_out:
            return self._finish(Status.TIME_LIMIT, heap)
        if self.inc_x is None:
            return self._finish(Status.INFEASIBLE, [])
        return self._finish(Status.OPTIMAL, [])

    def _branch_integral(self, heap, seq, node, fixed, val, basis):
        # An integral LP point only matters for tie-breaking beyond itself:
        # split off the free binaries that could still improve the key.
        if not self.tie_pos:
            return
        free = [i for i in self.tie_pos if node.lo[i] != node.hi[i]]
        for i in free:
            if fixed[i] == 0:
                lo, hi = node.lo.copy(), node.hi.copy()
                lo[i] = hi[i] = 1
                heapq.heappush(heap, (val, next(seq), _Node(lo, hi, basis, node.depth + 1)))
                lo2, hi2 = node.lo.copy(), node.hi.copy()
                lo2[i] = hi2[i] = 0
                heapq.heappush(heap, (val, next(seq), _Node(lo2, hi2, basis, node.depth + 1)))
                return

    def _prune(self, bound, node):
        if bound > self.inc_val + TIE_TOL:
            return True
        if self.inc_key is None and self.inc_x is None:
            return False
        can_win_tie = self._potential(node.lo, node.hi) > self.inc_key
        if bound >= self.inc_val - TIE_TOL and not can_win_tie:
            return True
        if bound >= self.inc_val - self.gap_tol * self._scale() and not can_win_tie:
            self.gap_floor = min(self.gap_floor, bound)
            return True
        return False

    def _finish(self, status, heap):
        model = self.model
        out = SolveOutcome(status=status, nodes=self.nodes, wall_time=time.monotonic() - self.start)
        open_bound = min((b for b, _, _ in heap), default=math.inf)
        floor = min(open_bound, self.gap_floor)
        if self.inc_x is not None:
            out.x = self.inc_x
            out.objective = model.objective_value(self.inc_x)
            out.values = model.values_dict(self.inc_x)
            lower = min(floor, self.inc_val)
            out.gap = max(0.0, self.inc_val - lower) / self._scale() if math.isfinite(lower) else math.inf
            out.bound = self.sign * lower if math.isfinite(lower) else self.sign * -math.inf
        elif status is Status.OPTIMAL:
            out.status = Status.INFEASIBLE
        if status is Status.UNBOUNDED:
            out.objective = math.inf if model.sense == "max" else -math.inf
        return out


def solve_milp(
    model: MilpModel,
    incumbent=None,
    time_limit: float | None = None,
    gap_tol: float = DEFAULT_GAP,
    cutoff: float | None = None,
) -> SolveOutcome:
    """Solve a linear model with binaries by best-first branch-and-bound.

    Nodes are explored in order of their LP bound; the branching variable
    is the most fractional binary (lowest index on ties). ``incumbent`` may
    be a full primal point or just the binary assignment (dict by name or
    array by index); an invalid one is ignored with an
    :class:`InvalidIncumbent` warning. Among solutions within 1e-9 of each
    other the one preferred by ``model.tie_break`` is returned.
    """
    if model.quad_terms:
        raise ValueError("quadratic objective: use solve_convex_miqp")
    search = _Search(model, time_limit, gap_tol, cutoff)
    if incumbent is not None:
        search.warm_start(incumbent)
    out = search.run()
    log.debug("milp %s: %s obj=%s nodes=%d", model.name, out.status, out.objective, out.nodes)
    return out
