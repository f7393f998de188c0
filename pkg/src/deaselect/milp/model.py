"""Model container for LP/MILP/convex-MIQP problems."""

from __future__ import annotations

import copy
import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

INF = math.inf
FEAS_TOL = 1e-7
INT_TOL = 1e-6

_RELATIONS = {"<=": "<=", "=<": "<=", ">=": ">=", "=>": ">=", "=": "=", "==": "="}


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    TIME_LIMIT = "TimeLimit"

    def __str__(self):
        return self.value


@dataclass
class Variable:
    name: str
    kind: str  # "continuous" or "binary"
    lb: float
    ub: float

    @property
    def is_binary(self):
        return self.kind == "binary"


@dataclass
class Constraint:
    index: np.ndarray
    coef: np.ndarray
    relation: str
    rhs: float
    name: str


@dataclass
class QuadTerm:
    """``weight * (target - (const + sum coef_j x_j))**2``."""

    index: np.ndarray
    coef: np.ndarray
    const: float = 0.0
    target: float = 1.0
    weight: float = 1.0

    def expr_value(self, x):
        return self.const + float(self.coef @ x[self.index])


@dataclass
class SolveOutcome:
    status: Status
    objective: float = math.nan
    values: dict[str, float] = field(default_factory=dict)
    x: np.ndarray | None = None
    gap: float = 0.0
    nodes: int = 0
    wall_time: float = 0.0
    bound: float = math.nan

    @property
    def has_solution(self):
        return self.x is not None


class MilpModel:
    """Variables with bounds, sparse linear rows, and an objective.

    The objective is linear, optionally plus separable convex terms
    ``w * (a - e)**2`` on affine expressions ``e`` (minimisation only).
    ``tie_break`` lists binaries, in priority order, used to choose
    among equally good integer solutions (prefer 1 over 0, left to right).
    """

    def __init__(self, name="model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.obj_index = np.zeros(0, dtype=int)
        self.obj_coef = np.zeros(0)
        self.obj_constant = 0.0
        self.sense = "max"
        self.quad_terms: list[QuadTerm] = []
        self.tie_break: list[int] = []
        self._names: dict[str, int] = {}

    # -- building ----------------------------------------------------------
    @property
    def num_vars(self):
        return len(self.variables)

    def add_var(self, name, lb=0.0, ub=INF, binary=False):
        if name in self._names:
            raise ValueError(f"duplicate variable name {name!r}")
        if binary:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if lb > ub:
            raise ValueError(f"variable {name!r} has lb > ub")
        self.variables.append(Variable(name, "binary" if binary else "continuous", float(lb), float(ub)))
        self._names[name] = len(self.variables) - 1
        return len(self.variables) - 1

    def var_index(self, name):
        return self._names[name]

    def _check_terms(self, terms):
        if isinstance(terms, dict):
            idx = np.fromiter(terms.keys(), dtype=int, count=len(terms))
            val = np.fromiter(terms.values(), dtype=float, count=len(terms))
        else:
            idx, val = terms
            idx = np.asarray(idx, dtype=int)
            val = np.asarray(val, dtype=float)
        if idx.size and (idx.min() < 0 or idx.max() >= self.num_vars):
            raise IndexError("coefficient references an unknown variable")
        if len(np.unique(idx)) != len(idx):
            raise ValueError("repeated variable in one linear expression")
        return idx, val

    def add_constraint(self, terms, relation, rhs, name=None):
        """Add ``sum coef*x (relation) rhs``; ``terms`` is {var: coef} or (idx, coef)."""
        rel = _RELATIONS.get(relation)
        if rel is None:
            raise ValueError(f"unknown relation {relation!r}")
        idx, val = self._check_terms(terms)
        name = name or f"c{len(self.constraints)}"
        self.constraints.append(Constraint(idx, val, rel, float(rhs), name))
        return len(self.constraints) - 1

    def set_objective(self, terms, sense="max", constant=0.0):
        if sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        if self.quad_terms and sense != "min":
            raise ValueError("quadratic terms require sense='min'")
        self.obj_index, self.obj_coef = self._check_terms(terms)
        self.obj_constant = float(constant)
        self.sense = sense

    def add_quad_term(self, terms, target=1.0, weight=1.0, const=0.0):
        """Add ``weight * (target - (const + terms))**2`` to a min objective."""
        if self.sense != "min":
            raise ValueError("quadratic terms require sense='min'")
        if weight < 0:
            raise ValueError("quadratic weight must be nonnegative (convexity)")
        idx, val = self._check_terms(terms)
        self.quad_terms.append(QuadTerm(idx, val, float(const), float(target), float(weight)))

    def set_bounds(self, j, lb, ub):
        v = self.variables[j]
        if v.is_binary and (lb < 0 or ub > 1):
            raise ValueError("binary bounds must stay inside [0, 1]")
        v.lb, v.ub = float(lb), float(ub)

    def copy(self):
        return copy.deepcopy(self)

    # -- queries -----------------------------------------------------------
    @property
    def binaries(self):
        return [j for j, v in enumerate(self.variables) if v.is_binary]

    def arrays(self):
        """Return (c, A csr, relations, b, lb, ub) with ``c`` in the model sense."""
        n = self.num_vars
        rows, cols, vals = [], [], []
        for i, con in enumerate(self.constraints):
            rows.append(np.full(len(con.index), i))
            cols.append(con.index)
            vals.append(con.coef)
        if rows:
            A = sp.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(len(self.constraints), n),
            )
        else:
            A = sp.csr_matrix((0, n))
        c = np.zeros(n)
        c[self.obj_index] = self.obj_coef
        rel = [con.relation for con in self.constraints]
        b = np.array([con.rhs for con in self.constraints], dtype=float)
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        return c, A, rel, b, lb, ub

    def objective_value(self, x):
        x = np.asarray(x, dtype=float)
        val = self.obj_constant + float(self.obj_coef @ x[self.obj_index])
        for q in self.quad_terms:
            val += q.weight * (q.target - q.expr_value(x)) ** 2
        return val

    def violations(self, x, tol=FEAS_TOL, int_tol=INT_TOL):
        """Describe every bound, row, or integrality violation of ``x``."""
        x = np.asarray(x, dtype=float)
        out = []
        for j, v in enumerate(self.variables):
            if x[j] < v.lb - tol or x[j] > v.ub + tol:
                out.append(f"{v.name}={x[j]:.6g} outside [{v.lb}, {v.ub}]")
            if v.is_binary and abs(x[j] - round(x[j])) > int_tol:
                out.append(f"{v.name}={x[j]:.6g} not integral")
        for con in self.constraints:
            lhs = float(con.coef @ x[con.index])
            scale = max(1.0, abs(con.rhs))
            if con.relation == "<=" and lhs > con.rhs + tol * scale:
                out.append(f"{con.name}: {lhs:.9g} > {con.rhs:.9g}")
            elif con.relation == ">=" and lhs < con.rhs - tol * scale:
                out.append(f"{con.name}: {lhs:.9g} < {con.rhs:.9g}")
            elif con.relation == "=" and abs(lhs - con.rhs) > tol * scale:
                out.append(f"{con.name}: {lhs:.9g} != {con.rhs:.9g}")
        return out

    def values_dict(self, x):
        return {v.name: float(x[j]) for j, v in enumerate(self.variables)}

    # -- export ------------------------------------------------------------
    def to_lp_string(self):
        """Render the model in CPLEX LP text format (for external cross-checks)."""
        names = [_lp_name(v.name) for v in self.variables]

        def linear(idx, coef):
            parts = []
            for j, a in zip(idx, coef):
                if a == 0:
                    continue
                sign = "-" if a < 0 else "+"
                parts.append(f"{sign} {abs(a):.17g} {names[j]}")
            return " ".join(parts) if parts else "0 " + (names[0] if names else "")

        lines = [f"\\ {self.name}", "Maximize" if self.sense == "max" else "Minimize"]
        obj = " obj: " + linear(self.obj_index, self.obj_coef)
        const = self.obj_constant
        if self.quad_terms:
            lin: dict[int, float] = {}
            quad: dict[tuple[int, int], float] = {}
            for q in self.quad_terms:
                shift = q.target - q.const
                const += q.weight * shift * shift
                for j, a in zip(q.index, q.coef):
                    lin[j] = lin.get(j, 0.0) - 2.0 * q.weight * shift * a
                for s, (j, a) in enumerate(zip(q.index, q.coef)):
                    for j2, a2 in list(zip(q.index, q.coef))[s:]:
                        key = (min(j, j2), max(j, j2))
                        mult = 1.0 if j == j2 else 2.0
                        quad[key] = quad.get(key, 0.0) + mult * q.weight * a * a2
            if lin:
                obj += " " + linear(list(lin), list(lin.values()))
            qparts = []
            for (j, j2), a in quad.items():
                term = f"{names[j]} ^ 2" if j == j2 else f"{names[j]} * {names[j2]}"
                qparts.append(f"{'-' if a < 0 else '+'} {2 * abs(a):.17g} {term}")
            obj += " + [ " + " ".join(qparts) + " ] / 2"
        lines.append(obj)
        if const:
            lines.append(f"\\ objective constant: {const:.17g}")
        lines.append("Subject To")
        rel = {"<=": "<=", ">=": ">=", "=": "="}
        for con in self.constraints:
            lines.append(f" {_lp_name(con.name)}: {linear(con.index, con.coef)} {rel[con.relation]} {con.rhs:.17g}")
        lines.append("Bounds")
        for v, nm in zip(self.variables, names):
            lo = "-inf" if v.lb == -INF else f"{v.lb:.17g}"
            hi = "+inf" if v.ub == INF else f"{v.ub:.17g}"
            lines.append(f" {lo} <= {nm} <= {hi}")
        bins = [nm for v, nm in zip(self.variables, names) if v.is_binary]
        if bins:
            lines.append("Binaries")
            for i in range(0, len(bins), 8):
                lines.append(" " + " ".join(bins[i : i + 8]))
        lines.append("End")
        return "\n".join(lines) + "\n"

    def write_lp(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_lp_string())


def _lp_name(name):
    out = "".join(ch if ch.isalnum() or ch in "_.[]" else "_" for ch in name)
    return out if out and not out[0].isdigit() and out[0] != "." else "v" + out
