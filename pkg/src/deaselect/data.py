"""Datasets of decision-making units: CSV ingestion, normalisation, statistics.

CSV layout: UTF-8, comma separated, header row first. The first column holds
the DMU id; every other column is ``in:<name>`` (an input) or ``out:<name>``
(an output). Values are plain decimals with ``.`` as the decimal point.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DataError,
    DataErrors,
    DuplicateDmuId,
    EmptyVector,
    MissingColumn,
    NegativeValue,
    NonNumericCell,
    TooFewRows,
)

INPUT_PREFIX = "in:"
OUTPUT_PREFIX = "out:"


class ZeroRangeWarning(UserWarning):
    """An output column is constant and was left unnormalised."""


def _readonly(a):
    a = np.array(a, dtype=float, copy=True)
    if a.ndim != 2:
        raise DataError(f"expected a 2-d array, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """K DMUs with an input matrix (K x I) and an output matrix (K x O)."""

    dmu_ids: tuple[str, ...]
    inputs: np.ndarray
    outputs: np.ndarray
    input_names: tuple[str, ...] = ()
    output_names: tuple[str, ...] = ()

    def __post_init__(self):
        x, y = _readonly(self.inputs), _readonly(self.outputs)
        ids = tuple(str(i) for i in self.dmu_ids)
        if x.shape[0] != len(ids) or y.shape[0] != len(ids):
            raise DataError(f"{len(ids)} ids but {x.shape[0]} input rows and {y.shape[0]} output rows")
        in_names = tuple(self.input_names) or tuple(f"x{i + 1}" for i in range(x.shape[1]))
        out_names = tuple(self.output_names) or tuple(f"y{o + 1}" for o in range(y.shape[1]))
        if len(in_names) != x.shape[1] or len(out_names) != y.shape[1]:
            raise DataError("column name count does not match the matrix width")
        object.__setattr__(self, "dmu_ids", ids)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "outputs", y)
        object.__setattr__(self, "input_names", in_names)
        object.__setattr__(self, "output_names", out_names)

    @classmethod
    def from_arrays(cls, inputs, outputs, dmu_ids=None, input_names=(), output_names=()):
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        outputs = np.atleast_2d(np.asarray(outputs, dtype=float))
        if dmu_ids is None:
            dmu_ids = [str(k + 1) for k in range(inputs.shape[0])]
        return cls(tuple(dmu_ids), inputs, outputs, tuple(input_names), tuple(output_names))

    @property
    def K(self) -> int:
        return self.inputs.shape[0]

    @property
    def I(self) -> int:  # noqa: E743
        return self.inputs.shape[1]

    @property
    def O(self) -> int:  # noqa: E743
        return self.outputs.shape[1]

    def violations(self) -> list[str]:
        """List every broken invariant; an empty list means the dataset is usable."""
        out = []
        if self.K < 1:
            out.append("no DMUs")
        if self.I < 1:
            out.append("no input columns")
        if self.O < 1:
            out.append("no output columns")
        if len(set(self.dmu_ids)) != len(self.dmu_ids):
            out.append("duplicate DMU ids")
        for label, mat, names in (("input", self.inputs, self.input_names), ("output", self.outputs, self.output_names)):
            bad = ~np.isfinite(mat)
            for k, c in zip(*np.nonzero(bad)):
                out.append(f"DMU {self.dmu_ids[k]}: {label} {names[c]} is not finite")
            neg = np.isfinite(mat) & (mat < 0)
            for k, c in zip(*np.nonzero(neg)):
                out.append(f"DMU {self.dmu_ids[k]}: {label} {names[c]} is negative ({mat[k, c]:g})")
        if self.I:
            for k in np.nonzero(~np.any(self.inputs > 0, axis=1))[0]:
                out.append(f"DMU {self.dmu_ids[k]}: all inputs are zero")
        return out

    def check(self) -> "Dataset":
        problems = self.violations()
        if problems:
            raise DataError("; ".join(problems))
        return self

    def with_outputs(self, outputs) -> "Dataset":
        return Dataset(self.dmu_ids, self.inputs, outputs, self.input_names, self.output_names)


def _parse_number(text: str):
    t = text.strip().replace("−", "-")
    if not t:
        return None
    try:
        v = float(t)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _roles(header, schema):
    roles = []
    for pos, name in enumerate(header):
        name = name.strip()
        if schema is not None:
            role = schema.get(name)
            if role is None:
                raise MissingColumn(f"column {name!r} has no role in the schema")
            roles.append((role, name))
        elif pos == 0:
            roles.append(("id", name))
        elif name.startswith(INPUT_PREFIX):
            roles.append(("input", name[len(INPUT_PREFIX):]))
        elif name.startswith(OUTPUT_PREFIX):
            roles.append(("output", name[len(OUTPUT_PREFIX):]))
        else:
            raise MissingColumn(f"column {name!r} is neither 'in:<name>' nor 'out:<name>'")
    kinds = [r for r, _ in roles]
    if kinds.count("id") != 1:
        raise MissingColumn("exactly one id column is required")
    if "input" not in kinds:
        raise MissingColumn("no input column ('in:<name>')")
    if "output" not in kinds:
        raise MissingColumn("no output column ('out:<name>')")
    return roles


def load_dataset(path, schema: dict[str, str] | None = None, strict: bool = True) -> Dataset:
    """Read a DMU table from CSV.

    ``schema`` optionally maps header names to ``"id"``, ``"input"`` or
    ``"output"``; without it the header prefixes decide. All cell errors are
    collected before raising. With ``strict`` the Dataset invariants (such
    as a positive input per DMU) are enforced too.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise MissingColumn(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    roles = _roles(header, schema)
    if not body:
        raise TooFewRows(f"{path}: no data rows")

    errors: list[DataError] = []
    ids, xs, ys = [], [], []
    seen: dict[str, int] = {}
    for r, row in enumerate(body, start=1):
        if len(row) != len(header):
            errors.append(DataError(f"row {r}: {len(row)} cells, header has {len(header)}"))
            continue
        x, y = [], []
        for (role, name), cell in zip(roles, row):
            if role == "id":
                dmu = cell.strip()
                if dmu in seen:
                    errors.append(DuplicateDmuId(dmu, (seen[dmu], r)))
                seen.setdefault(dmu, r)
                ids.append(dmu)
                continue
            v = _parse_number(cell)
            if v is None:
                errors.append(NonNumericCell(r, header[roles.index((role, name))], cell))
                v = math.nan
            elif v < 0:
                errors.append(NegativeValue(r, header[roles.index((role, name))], v))
            (x if role == "input" else y).append(v)
        xs.append(x)
        ys.append(y)
    if errors:
        raise errors[0] if len(errors) == 1 else DataErrors(errors)

    d = Dataset(
        tuple(ids),
        np.array(xs, dtype=float),
        np.array(ys, dtype=float),
        tuple(n for r, n in roles if r == "input"),
        tuple(n for r, n in roles if r == "output"),
    )
    if strict:
        d.check()
    return d


def _fmt(v: float) -> str:
    return repr(float(v))  # shortest string that reads back to the same float


def write_dataset(d: Dataset, path) -> None:
    """Write ``d`` in the CSV layout read by :func:`load_dataset`."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [INPUT_PREFIX + n for n in d.input_names] + [OUTPUT_PREFIX + n for n in d.output_names])
        for k in range(d.K):
            w.writerow([d.dmu_ids[k]] + [_fmt(v) for v in d.inputs[k]] + [_fmt(v) for v in d.outputs[k]])


def output_ranges(d: Dataset) -> np.ndarray:
    return d.outputs.max(axis=0) - d.outputs.min(axis=0)


def zero_range_outputs(d: Dataset) -> list[int]:
    return [int(o) for o in np.nonzero(output_ranges(d) == 0)[0]]


def normalize_outputs(d: Dataset) -> Dataset:
    """Divide every output column by its range (max - min).

    Constant columns have no range to divide by; they are left as they are
    and a :class:`ZeroRangeWarning` names them.
    """
    rng = output_ranges(d)
    const = rng == 0
    if np.any(const):
        names = ", ".join(d.output_names[o] for o in np.nonzero(const)[0])
        warnings.warn(f"zero range, left unnormalized: {names}", ZeroRangeWarning, stacklevel=2)
    scale = np.where(const, 1.0, rng)
    return d.with_outputs(d.outputs / scale)


@dataclass(frozen=True)
class CorrelationMatrix:
    rho: np.ndarray
    names: tuple[str, ...] = field(default=())


def correlation_matrix(d: Dataset) -> CorrelationMatrix:
    """Pearson correlation between output columns.

    Pairs involving a zero-variance column get 0, including the diagonal
    entry of that column.
    """
    if d.K < 2:
        raise TooFewRows("correlation needs at least two DMUs")
    y = d.outputs - d.outputs.mean(axis=0)
    ss = np.sqrt((y * y).sum(axis=0))
    live = ss > 0
    rho = np.zeros((d.O, d.O))
    if np.any(live):
        z = y[:, live] / ss[live]
        sub = np.clip(z.T @ z, -1.0, 1.0)
        np.fill_diagonal(sub, 1.0)
        idx = np.nonzero(live)[0]
        rho[np.ix_(idx, idx)] = sub
    rho = (rho + rho.T) / 2
    return CorrelationMatrix(rho, d.output_names)


def threshold_rule_matrix(rho, tau: float) -> np.ndarray:
    """0/1 conflict matrix: 1 where ``rho >= tau`` off the diagonal."""
    if not -1.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [-1, 1], got {tau}")
    r = rho.rho if isinstance(rho, CorrelationMatrix) else np.asarray(rho, dtype=float)
    out = (r >= tau).astype(int)
    np.fill_diagonal(out, 0)
    return out


@dataclass(frozen=True)
class EfficiencySummary:
    min: float
    max: float
    mean: float
    std_dev: float
    q1: float
    q2: float
    q3: float
    iqr: float

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in ("min", "max", "mean", "std_dev", "q1", "q2", "q3", "iqr")}


def summarize(effs) -> EfficiencySummary:
    """Min, max, mean, population sd and linearly interpolated quartiles."""
    e = np.asarray(effs, dtype=float).ravel()
    if e.size == 0:
        raise EmptyVector("cannot summarise an empty efficiency vector")
    q1, q2, q3 = np.percentile(e, [25, 50, 75])
    return EfficiencySummary(
        float(e.min()), float(e.max()), float(e.mean()), float(e.std()), float(q1), float(q2), float(q3), float(q3 - q1)
    )
