"""Run reports: JSON summaries and CSV plot data."""

from __future__ import annotations

import csv
import datetime
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, output_ranges, write_dataset
from .selection import SelectionSolution

DIGITS = 12
HIST_BINS = 20


def num(v):
    """Round a float to 12 significant digits (None for NaN/inf)."""
    v = float(v)
    if not math.isfinite(v):
        return None
    return float(format(v, f".{DIGITS}g"))


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), f".{DIGITS}g")
    return str(v)


def read_csv(path) -> tuple[list[str], list[list]]:
    """Read a CSV written by :class:`RunReport`; numeric cells become floats."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))

    def cell(s):
        try:
            return float(s)
        except ValueError:
            return s

    return rows[0], [[cell(s) for s in r] for r in rows[1:]]


def efficiency_histogram(effs, n_bins: int = HIST_BINS) -> np.ndarray:
    """Counts over equal bins of [0, 1]; the last bin includes 1."""
    e = np.asarray(effs, dtype=float)
    e = e[np.isfinite(e)]
    idx = np.minimum((np.clip(e, 0.0, 1.0) * n_bins).astype(int), n_bins - 1)
    return np.bincount(idx, minlength=n_bins)


def dataset_digest(d: Dataset, normalized: bool) -> dict:
    return {
        "K": d.K,
        "I": d.I,
        "O": d.O,
        "normalized": normalized,
        "inputs": {n: [num(lo), num(hi)] for n, lo, hi in zip(d.input_names, d.inputs.min(0), d.inputs.max(0))},
        "outputs": {n: [num(lo), num(hi)] for n, lo, hi in zip(d.output_names, d.outputs.min(0), d.outputs.max(0))},
        "output_ranges": [num(r) for r in output_ranges(d)],
    }


def solution_dict(sol: SelectionSolution, d: Dataset, timing: bool = True) -> dict:
    out = sol.outcome
    res = {
        "mode": sol.mode,
        "dmu": None if sol.dmu is None else d.dmu_ids[sol.dmu],
        "selected_outputs": [o + 1 for o in sol.selected_outputs],
        "selected_output_names": [d.output_names[o] for o in sol.selected_outputs],
        "objective": num(sol.objective_value),
        "status": str(out.status),
        "efficiencies": {d.dmu_ids[k]: num(e) for k, e in enumerate(sol.efficiencies)},
        "solver": {"nodes": out.nodes, "gap": num(out.gap), "bound": num(out.bound)},
    }
    if sol.selected_inputs is not None:
        res["selected_inputs"] = [i + 1 for i in sol.selected_inputs]
    if timing:
        res["solver"]["wall_time"] = num(out.wall_time)
    if sol.greedy is not None:
        res["greedy"] = {
            "order": [o + 1 for o in sol.greedy.order],
            "values": [num(v) for v in sol.greedy.values],
        }
    return res


@dataclass
class RunReport:
    command: list[str]
    version: str
    body: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)
    datasets: dict[str, Dataset] = field(default_factory=dict)

    def table(self, name: str, header: list[str], rows: list[list]) -> None:
        self.tables[name] = (header, rows)

    def to_json(self, timestamp: bool = True) -> str:
        doc = {"tool": "deaselect", "version": self.version, "command": self.command}
        if timestamp:
            doc["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
        doc["warnings"] = self.warnings
        doc.update(self.body)
        return json.dumps(doc, indent=2) + "\n"

    def write(self, out_dir, timestamp: bool = True) -> list[Path]:
        """Write report.json and every table; returns the written paths."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, (header, rows) in self.tables.items():
            p = out / name
            with p.open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for r in rows:
                    w.writerow([fmt(v) for v in r])
            paths.append(p)
        for name, d in self.datasets.items():
            p = out / name
            write_dataset(d, p)
            paths.append(p)
        p = out / "report.json"
        p.write_text(self.to_json(timestamp), encoding="utf-8")
        paths.append(p)
        return paths
