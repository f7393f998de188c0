"""Bounded-variable revised simplex with primal and dual iterations.

The engine works on ``min c'x`` subject to row relations ``A x (<=|>=|=) b``
and column bounds ``lb <= x <= ub``. Every row gets a logical (slack)
column so that ``A x + s = b``; the slack bounds encode the relation.
Artificial columns are appended only on a cold start and are pinned to
zero afterwards, so a basis snapshot from one solve stays valid for any
later solve on the same engine (bound changes, warm starts in B&B).
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

BASIC, AT_LOWER, AT_UPPER, AT_ZERO = 0, 1, 2, 3

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
TINY_PIVOT = 1e-12
DENSE_ROWS = 300
REFACTOR_EVERY = 100


class LPStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    TIME_LIMIT = "TimeLimit"


class NumericalBreakdown(ArithmeticError):
    """Raised when pivots keep collapsing below the numerical floor."""


@dataclass
class Basis:
    basic: np.ndarray
    state: np.ndarray


@dataclass
class LPResult:
    status: LPStatus
    x: np.ndarray | None
    objective: float
    basis: Basis | None
    iterations: int


class _DenseFactor:
    def __init__(self, B):
        try:
            self.inv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError("singular basis") from exc
        if not np.all(np.isfinite(self.inv)):
            raise np.linalg.LinAlgError("singular basis")
        self.updates = 0

    def ftran(self, v):
        return self.inv @ v

    def btran(self, v):
        return v @ self.inv

    def update(self, r, alpha):
        row = self.inv[r] / alpha[r]
        self.inv -= np.outer(alpha, row)
        self.inv[r] = row
        self.updates += 1


class _SparseFactor:
    """LU of the initial basis plus a product-form eta file (etas kept sparse)."""

    def __init__(self, B):
        try:
            self.lu = splu(sp.csc_matrix(B), permc_spec="COLAMD")
        except RuntimeError as exc:
            raise np.linalg.LinAlgError("singular basis") from exc
        self.etas: list[tuple[int, float, np.ndarray, np.ndarray]] = []
        self.updates = 0

    def ftran(self, v):
        w = self.lu.solve(np.asarray(v, dtype=float))
        for r, ar, idx, vals in self.etas:
            wr = w[r] / ar
            if wr != 0.0:
                w[idx] -= wr * vals
            w[r] = wr
        return w

    def btran(self, v):
        z = np.array(v, dtype=float)
        for r, ar, idx, vals in reversed(self.etas):
            z[r] = (z[r] - z[idx] @ vals) / ar
        return self.lu.solve(z, trans="T")

    def update(self, r, alpha):
        idx = np.flatnonzero(alpha)
        idx = idx[idx != r]
        self.etas.append((r, float(alpha[r]), idx, alpha[idx].copy()))
        self.updates += 1


def _pow2_scale(v):
    out = np.ones_like(v)
    nz = v > 0
    out[nz] = np.exp2(np.round(-np.log2(v[nz])))
    return out


class SimplexEngine:
    """Revised simplex over a fixed constraint matrix with mutable bounds.

    Parameters
    ----------
    A : (m, n) array or sparse matrix
    senses : sequence of ``"<="``, ``">="`` or ``"="``
    b, c, lb, ub : 1-D arrays; ``c`` is minimised.
    """

    def __init__(self, A, senses, b, c, lb, ub, scale=True):
        A = sp.csr_matrix(A, dtype=float)
        m, n = A.shape
        self.m, self.n = m, n
        b = np.asarray(b, dtype=float)
        c = np.asarray(c, dtype=float)
        lb = np.asarray(lb, dtype=float)
        ub = np.asarray(ub, dtype=float)
        if scale and A.nnz:
            absA = abs(A)
            rs = _pow2_scale(np.asarray(absA.max(axis=1).todense()).ravel())
            A1 = sp.diags(rs) @ A
            cs = _pow2_scale(np.asarray(abs(A1).max(axis=0).todense()).ravel())
            A = sp.csr_matrix(A1 @ sp.diags(cs))
        else:
            rs = np.ones(m)
            cs = np.ones(n)
        self.row_scale, self.col_scale = rs, cs
        self.b = b * rs
        self.c_orig = c
        slack_lb = np.zeros(m)
        slack_ub = np.zeros(m)
        for i, s in enumerate(senses):
            if s == "<=":
                slack_ub[i] = np.inf
            elif s == ">=":
                slack_lb[i] = -np.inf
            elif s != "=":
                raise ValueError(f"unknown relation {s!r}")
        self.lb = np.concatenate([lb / cs, slack_lb])
        self.ub = np.concatenate([ub / cs, slack_ub])
        self.cost = np.concatenate([c * cs, np.zeros(m)])
        self._set_matrix(sp.hstack([A, sp.identity(m, format="csr")], format="csc"))
        self.state = np.full(self.ncols, AT_LOWER, dtype=np.int8)
        self.basic = np.arange(n, n + m)
        self.x = np.zeros(self.ncols)
        self.factor = None
        self.iterations = 0

    # -- matrix plumbing -------------------------------------------------
    def _set_matrix(self, Acsc):
        self.A = Acsc
        self.ncols = Acsc.shape[1]
        self._indptr, self._indices, self._data = Acsc.indptr, Acsc.indices, Acsc.data
        self._AT = Acsc.T.tocsr()
        self._dense = Acsc.toarray() if self.m * self.ncols <= 250_000 else None

    def _col(self, j):
        if self._dense is not None:
            return self._dense[:, j]
        v = np.zeros(self.m)
        s, e = self._indptr[j], self._indptr[j + 1]
        v[self._indices[s:e]] = self._data[s:e]
        return v

    def _at_dot(self, y):
        if self._dense is not None:
            return y @ self._dense
        return self._AT @ y

    _refactors = 0

    def _refactor(self):
        self._refactors += 1
        if self._dense is not None:
            B = self._dense[:, self.basic]
        else:
            B = self.A[:, self.basic]
        if self.m <= DENSE_ROWS:
            self.factor = _DenseFactor(B.toarray() if sp.issparse(B) else B)
        else:
            self.factor = _SparseFactor(B)
        self._compute_xb()

    def _compute_xb(self):
        xn = self.x.copy()
        xn[self.basic] = 0.0
        if self._dense is not None:
            r = self.b - self._dense @ xn
        else:
            r = self.b - self.A @ xn
        self.x[self.basic] = self.factor.ftran(r)

    def _nonbasic_value(self, j):
        st = self.state[j]
        if st == AT_LOWER:
            return self.lb[j]
        if st == AT_UPPER:
            return self.ub[j]
        return 0.0

    def _place_nonbasic(self, j):
        lo, hi = self.lb[j], self.ub[j]
        if np.isfinite(lo):
            self.state[j] = AT_LOWER
            self.x[j] = lo
        elif np.isfinite(hi):
            self.state[j] = AT_UPPER
            self.x[j] = hi
        else:
            self.state[j] = AT_ZERO
            self.x[j] = 0.0

    # -- public API ------------------------------------------------------
    def set_bounds(self, j, lo, hi):
        """Change bounds of structural column ``j`` (unscaled units)."""
        s = self.col_scale[j]
        self.lb[j] = lo / s
        self.ub[j] = hi / s

    def get_bounds(self, j):
        s = self.col_scale[j]
        return self.lb[j] * s, self.ub[j] * s

    def snapshot(self):
        return Basis(self.basic.copy(), self.state.copy())

    def solve(self, warm: Basis | None = None, deadline: float | None = None) -> LPResult:
        self.deadline = deadline
        self.iterations = 0
        if self.m == 0:
            return self._solve_unconstrained()
        status = None
        if warm is not None:
            status = self._warm(warm)
        if status is None:
            status = self._cold()
        if status is not LPStatus.OPTIMAL:
            return LPResult(status, None, np.nan, None, self.iterations)
        x = self.x[: self.n] * self.col_scale
        return LPResult(status, x, float(self.c_orig @ x), self.snapshot(), self.iterations)

    def _solve_unconstrained(self):
        x = np.zeros(self.n)
        for j in range(self.n):
            cj = self.cost[j]
            lo, hi = self.lb[j], self.ub[j]
            if lo > hi + FEAS_TOL:
                return LPResult(LPStatus.INFEASIBLE, None, np.nan, None, 0)
            if cj > 0:
                tgt = lo
            elif cj < 0:
                tgt = hi
            else:
                tgt = lo if np.isfinite(lo) else (hi if np.isfinite(hi) else 0.0)
            if not np.isfinite(tgt):
                return LPResult(LPStatus.UNBOUNDED, None, np.nan, None, 0)
            x[j] = tgt * self.col_scale[j]
        return LPResult(LPStatus.OPTIMAL, x, float(self.c_orig @ x), None, 0)

    # -- starts ----------------------------------------------------------
    def _warm(self, warm):
        basic = warm.basic
        state = warm.state
        if len(state) < self.ncols:
            state = np.concatenate([state, np.full(self.ncols - len(state), AT_LOWER, np.int8)])
        self.basic = basic.copy()
        self.state = state.copy()
        for j in np.flatnonzero(self.state != BASIC):
            st = self.state[j]
            if st == AT_UPPER and not np.isfinite(self.ub[j]):
                self._place_nonbasic(j)
            elif st == AT_LOWER and not np.isfinite(self.lb[j]):
                self._place_nonbasic(j)
            elif st == AT_ZERO and (np.isfinite(self.lb[j]) or np.isfinite(self.ub[j])):
                self._place_nonbasic(j)
            else:
                self.x[j] = self._nonbasic_value(j)
        try:
            self._refactor()
        except np.linalg.LinAlgError:
            return None
        d = self._reduced_costs(self.cost)
        if self._repair_dual(d):
            self._compute_xb()
            status = self._dual(self.cost)
            if status is LPStatus.OPTIMAL:
                return self._primal(self.cost)
            return status
        if self._primal_infeasibility() <= FEAS_TOL:
            return self._primal(self.cost)
        return None

    def _slack_dual(self):
        # Slack basis plus bound flips is often dual feasible (every column
        # with a negative cost boxed); the dual simplex then needs no phase 1.
        m, n = self.m, self.n
        self.basic = np.arange(n, n + m)
        self.state[:] = AT_LOWER
        self.state[self.basic] = BASIC
        for j in range(self.ncols):
            if self.state[j] != BASIC:
                self._place_nonbasic(j)
        self._refactor()
        if not self._repair_dual(self._reduced_costs(self.cost)):
            return None
        self._compute_xb()
        status = self._dual(self.cost)
        if status is LPStatus.OPTIMAL:
            return self._primal(self.cost)
        return status

    def _cold(self):
        status = self._slack_dual()
        if status is not None:
            return status
        m, n = self.m, self.n
        self.basic = np.arange(n, n + m)
        self.state[:] = AT_LOWER
        self.state[self.basic] = BASIC
        for j in range(self.ncols):
            if self.state[j] != BASIC:
                self._place_nonbasic(j)
        xn = self.x.copy()
        xn[self.basic] = 0.0
        r = self.b - self.A @ xn
        art_rows, art_signs = [], []
        for i in range(m):
            s = n + i
            lo, hi = self.lb[s], self.ub[s]
            if lo - FEAS_TOL <= r[i] <= hi + FEAS_TOL:
                self.x[s] = r[i]
                continue
            tgt = lo if r[i] < lo else hi
            self.state[s] = AT_LOWER if tgt == lo else AT_UPPER
            self.x[s] = tgt
            art_rows.append(i)
            art_signs.append(1.0 if r[i] - tgt > 0 else -1.0)
        if art_rows:
            k = len(art_rows)
            first = self.ncols
            art = sp.csc_matrix((art_signs, (art_rows, np.arange(k))), shape=(m, k))
            self._set_matrix(sp.hstack([self.A, art], format="csc"))
            self.lb = np.concatenate([self.lb, np.zeros(k)])
            self.ub = np.concatenate([self.ub, np.full(k, np.inf)])
            self.cost = np.concatenate([self.cost, np.zeros(k)])
            self.state = np.concatenate([self.state, np.full(k, BASIC, np.int8)])
            self.x = np.concatenate([self.x, np.abs(r[art_rows] - self.x[n + np.array(art_rows)])])
            self.basic[art_rows] = np.arange(first, first + k)
            self._refactor()
            phase1 = np.zeros(self.ncols)
            phase1[first:] = 1.0
            status = self._primal(phase1)
            if status is not LPStatus.OPTIMAL:
                return status
            infeas = float(self.x[first:].sum())
            self.ub[first:] = 0.0
            if infeas > 1e-7:
                return LPStatus.INFEASIBLE
            for j in range(first, self.ncols):
                if self.state[j] != BASIC:
                    self.state[j] = AT_LOWER
                    self.x[j] = 0.0
        else:
            self._refactor()
        return self._primal(self.cost)

    # -- helpers ---------------------------------------------------------
    def _reduced_costs(self, cost):
        y = self.factor.btran(cost[self.basic])
        d = cost - self._at_dot(y)
        d[self.basic] = 0.0
        return d

    def _repair_dual(self, d):
        """Flip boxed nonbasics to the bound their reduced cost prefers.

        Returns False if some unboxed column is dual infeasible.
        """
        ok = True
        fixed = self.ub - self.lb <= 0
        for j in np.flatnonzero((self.state == AT_LOWER) & (d < -OPT_TOL) & ~fixed):
            if np.isfinite(self.ub[j]):
                self.state[j] = AT_UPPER
                self.x[j] = self.ub[j]
            else:
                ok = False
        for j in np.flatnonzero((self.state == AT_UPPER) & (d > OPT_TOL) & ~fixed):
            if np.isfinite(self.lb[j]):
                self.state[j] = AT_LOWER
                self.x[j] = self.lb[j]
            else:
                ok = False
        if np.any((self.state == AT_ZERO) & (np.abs(d) > OPT_TOL)):
            ok = False
        return ok

    def _primal_infeasibility(self):
        xb = self.x[self.basic]
        lo = self.lb[self.basic]
        hi = self.ub[self.basic]
        return float(max(np.max(lo - xb, initial=0.0), np.max(xb - hi, initial=0.0)))

    def _tick(self, small_pivots):
        self.iterations += 1
        if self.deadline is not None and (self.iterations & 15) == 0 and time.monotonic() > self.deadline:
            return LPStatus.TIME_LIMIT
        if self.iterations > 50 * (self.m + self.ncols) + 1000:
            raise NumericalBreakdown("simplex iteration limit exceeded")
        if small_pivots > 20:
            raise NumericalBreakdown("pivot magnitudes repeatedly below 1e-12")
        if self.factor.updates >= REFACTOR_EVERY:
            self._refactor()
        return None

    def _pivot(self, r, q, alpha):
        p = self.basic[r]
        self.basic[r] = q
        self.state[q] = BASIC
        self.factor.update(r, alpha)
        return p

    # -- primal simplex --------------------------------------------------
    def _primal(self, cost):
        m, ncols = self.m, self.ncols
        degenerate = 0
        bland = False
        small = 0
        while True:
            stop = self._tick(small)
            if stop is not None:
                return stop
            d = self._reduced_costs(cost)
            st = self.state
            movable = self.ub > self.lb
            score = np.zeros(ncols)
            up = (st == AT_LOWER) & (d < -OPT_TOL) & movable
            dn = (st == AT_UPPER) & (d > OPT_TOL) & movable
            fr = (st == AT_ZERO) & (np.abs(d) > OPT_TOL)
            score[up] = -d[up]
            score[dn] = d[dn]
            score[fr] = np.abs(d[fr])
            cand = np.flatnonzero(score)
            if cand.size == 0:
                return LPStatus.OPTIMAL
            q = int(cand[0]) if bland else int(cand[np.argmax(score[cand])])
            direction = 1.0 if d[q] < 0 else -1.0
            alpha = self.factor.ftran(self._col(q))
            delta = -direction * alpha
            xb = self.x[self.basic]
            lo = self.lb[self.basic]
            hi = self.ub[self.basic]
            dec = delta < -PIVOT_TOL
            inc = delta > PIVOT_TOL
            t_exact = np.full(m, np.inf)
            t_relax = np.full(m, np.inf)
            with np.errstate(invalid="ignore", divide="ignore"):
                t_exact[dec] = (xb[dec] - lo[dec]) / -delta[dec]
                t_relax[dec] = (xb[dec] - lo[dec] + FEAS_TOL) / -delta[dec]
                t_exact[inc] = (hi[inc] - xb[inc]) / delta[inc]
                t_relax[inc] = (hi[inc] - xb[inc] + FEAS_TOL) / delta[inc]
            t_flip = self.ub[q] - self.lb[q]
            tmax = np.min(t_relax) if m else np.inf
            if not np.isfinite(tmax) and not np.isfinite(t_flip):
                return LPStatus.UNBOUNDED
            if t_flip <= tmax:
                step = t_flip
                self.x[self.basic] = xb + step * delta
                self.x[q] += direction * step
                self.state[q] = AT_UPPER if direction > 0 else AT_LOWER
                self.x[q] = self.ub[q] if direction > 0 else self.lb[q]
                degenerate = 0
                bland = False
                continue
            if bland:
                tmin = np.min(t_exact)
                ties = np.flatnonzero(t_exact <= tmin + 1e-15)
                r = int(ties[np.argmin(self.basic[ties])])
            else:
                elig = np.flatnonzero(t_exact <= tmax)
                r = int(elig[np.argmax(np.abs(alpha[elig]))])
            if abs(alpha[r]) < TINY_PIVOT:
                small += 1
                self._refactor()
                continue
            step = max(t_exact[r], 0.0)
            hits_lower = delta[r] < 0
            self.x[self.basic] = xb + step * delta
            self.x[q] += direction * step
            leave = self._pivot(r, q, alpha)
            if hits_lower:
                self.state[leave] = AT_LOWER
                self.x[leave] = self.lb[leave]
            else:
                self.state[leave] = AT_UPPER
                self.x[leave] = self.ub[leave]
            if step <= 1e-12:
                degenerate += 1
                if degenerate > 3 * (m + ncols):
                    bland = True
            else:
                degenerate = 0
                bland = False

    # -- dual simplex ----------------------------------------------------
    def _dual(self, cost):
        m, ncols = self.m, self.ncols
        degenerate = 0
        bland = False
        small = 0
        d = None
        while True:
            refactors = self._refactors
            stop = self._tick(small)
            if stop is not None:
                return stop
            if d is None or self._refactors != refactors:
                d = self._reduced_costs(cost)
            xb = self.x[self.basic]
            lo = self.lb[self.basic]
            hi = self.ub[self.basic]
            below = lo - xb
            above = xb - hi
            infeas = np.maximum(below, above)
            if bland:
                cand = np.flatnonzero(infeas > FEAS_TOL)
                if cand.size == 0:
                    return LPStatus.OPTIMAL
                r = int(cand[np.argmin(self.basic[cand])])
            else:
                r = int(np.argmax(infeas))
                if infeas[r] <= FEAS_TOL:
                    return LPStatus.OPTIMAL
            to_lower = below[r] > 0
            target = lo[r] if to_lower else hi[r]
            e = np.zeros(m)
            e[r] = 1.0
            rho = self.factor.btran(e)
            arow = self._at_dot(rho)
            st = self.state
            movable = self.ub > self.lb
            if to_lower:
                elig = ((st == AT_LOWER) & (arow < -PIVOT_TOL)) | ((st == AT_UPPER) & (arow > PIVOT_TOL))
            else:
                elig = ((st == AT_LOWER) & (arow > PIVOT_TOL)) | ((st == AT_UPPER) & (arow < -PIVOT_TOL))
            elig = (elig & movable) | ((st == AT_ZERO) & (np.abs(arow) > PIVOT_TOL))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return LPStatus.INFEASIBLE
            a = np.abs(arow[cand])
            dj = np.abs(d[cand])
            ratio = dj / a
            if bland:
                rmin = np.min(ratio)
                q = int(cand[np.flatnonzero(ratio <= rmin + 1e-15)[0]])
            else:
                relax = np.min((dj + OPT_TOL) / a)
                ok = ratio <= relax
                q = int(cand[ok][np.argmax(a[ok])])
            alpha = self.factor.ftran(self._col(q))
            if abs(alpha[r]) < TINY_PIVOT:
                small += 1
                self._refactor()
                d = None
                continue
            theta = (xb[r] - target) / alpha[r]
            dq = d[q]
            d = d - (dq / arow[q]) * arow
            d[q] = 0.0
            self.x[self.basic] = xb - theta * alpha
            self.x[q] += theta
            leave = self._pivot(r, q, alpha)
            d[leave] = -dq / arow[q]
            d[self.basic] = 0.0
            self.state[leave] = AT_LOWER if to_lower else AT_UPPER
            self.x[leave] = target
            if abs(dq) <= 1e-12:
                degenerate += 1
                if degenerate > 3 * (m + ncols):
                    bland = True
            else:
                degenerate = 0
                bland = False
