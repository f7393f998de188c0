"""Command-line interface: ``deaselect <command> [flags]``.

Exit codes: 0 success, 2 data or configuration error, 3 solver failure,
4 structurally infeasible selection problem.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import SelectionConfig, load_config
from .data import (
    Dataset,
    ZeroRangeWarning,
    correlation_matrix,
    load_dataset,
    normalize_outputs,
    summarize,
    zero_range_outputs,
)
from .efficiency import ActiveSet, all_efficiencies
from .errors import CapExceeded, ConfigError, DataError, DeaError, StructurallyInfeasible
from .game import cross_efficiency, support_profile
from .oracle import enumerate_best
from .reports import RunReport, dataset_digest, efficiency_histogram, num, solution_dict
from .selection import solve_selection, sweep_p
from .synth import synthetic_dataset

EXIT_OK, EXIT_DATA, EXIT_SOLVER, EXIT_INFEASIBLE = 0, 2, 3, 4
ORACLE_TOL = 1e-6

log = logging.getLogger("deaselect")


class RunFailed(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, (DataError, ConfigError)):
        return EXIT_DATA
    if isinstance(exc, StructurallyInfeasible):
        return EXIT_INFEASIBLE
    return EXIT_SOLVER


# -- shared steps -------------------------------------------------------------

def _load(args, report: RunReport) -> Dataset:
    d = load_dataset(args.data)
    if args.normalize:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ZeroRangeWarning)
            d = normalize_outputs(d)
        report.warnings += [str(w.message) for w in caught if issubclass(w.category, ZeroRangeWarning)]
    report.body["dataset"] = dataset_digest(d, args.normalize)
    return d


def _config(args) -> SelectionConfig:
    if not args.config:
        raise ConfigError("this command needs --config")
    return load_config(args.config)


def _one_based(text: str, limit: int, what: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"--{what}: expected comma-separated integers, got {text!r}") from exc
    bad = [v for v in vals if not 1 <= v <= limit]
    if bad or not vals:
        raise ConfigError(f"--{what}: values must lie in 1..{limit}, got {text!r}")
    return [v - 1 for v in vals]


def _dmu(args, d: Dataset) -> int | None:
    if args.mode != "individual":
        return None
    if args.dmu is None:
        raise ConfigError("--mode individual needs --dmu")
    return _one_based(str(args.dmu), d.K, "dmu")[0]


def _eff_rows(d: Dataset, effs) -> list[list]:
    return [[d.dmu_ids[k], effs[k]] for k in range(d.K)]


def _hist_rows(counts) -> list[list]:
    n = len(counts)
    return [[b / n, int(c)] for b, c in enumerate(counts)]


def _summary_dict(s) -> dict:
    return {k: num(v) for k, v in s.as_dict().items()}


# -- commands -----------------------------------------------------------------

def cmd_eff(args, report: RunReport) -> int:
    d = _load(args, report)
    active = None
    if args.outputs:
        active = ActiveSet(_one_based(args.outputs, d.O, "outputs"))
    effs = all_efficiencies(d, active)
    report.body["active_outputs"] = [o + 1 for o in (active.outputs if active else range(d.O))]
    report.body["efficiencies"] = {d.dmu_ids[k]: num(e) for k, e in enumerate(effs)}
    report.body["summary"] = _summary_dict(summarize(effs))
    report.table("efficiencies.csv", ["dmu", "efficiency"], _eff_rows(d, effs))
    return EXIT_OK


def cmd_select(args, report: RunReport) -> int:
    d = _load(args, report)
    cfg = _config(args)
    dmu = _dmu(args, d)
    sol = solve_selection(d, cfg, args.mode, dmu)
    timing = not args.no_timestamp
    report.body["config"] = {"p": cfg.p, "objective": cfg.objective, "p_tilde": cfg.p_tilde}
    report.body["selection"] = solution_dict(sol, d, timing)
    scope = sol.efficiencies if dmu is None else sol.efficiencies[[dmu]]
    report.body["summary"] = _summary_dict(summarize(scope))
    report.table("efficiencies.csv", ["dmu", "efficiency"], _eff_rows(d, sol.efficiencies))
    if not sol.optimal:
        report.warnings.append(f"solver stopped with status {sol.outcome.status}, gap {sol.outcome.gap:.3g}")
    if args.oracle:
        try:
            ref = enumerate_best(d, cfg, args.mode, dmu)
        except CapExceeded as exc:
            report.warnings.append(f"oracle skipped: {exc}")
        else:
            diff = abs(ref.objective_value - sol.objective_value)
            report.body["oracle"] = {
                "objective": num(ref.objective_value),
                "selected_outputs": [o + 1 for o in ref.selected_outputs],
                "difference": num(diff),
                "agrees": diff <= ORACLE_TOL,
            }
            if diff > ORACLE_TOL:
                raise RunFailed(
                    EXIT_SOLVER,
                    f"oracle mismatch: solver {sol.objective_value:.12g} vs enumeration {ref.objective_value:.12g}",
                )
    return EXIT_OK


def cmd_sweep(args, report: RunReport) -> int:
    d = _load(args, report)
    cfg = _config(args)
    dmu = _dmu(args, d)
    lo = args.p_min or 1
    hi = args.p_max or d.O
    if not 1 <= lo <= hi <= d.O:
        raise ConfigError(f"need 1 <= p-min <= p-max <= {d.O}, got {lo}..{hi}")
    rows = sweep_p(d, cfg, range(lo, hi + 1), args.mode, dmu)
    timing = not args.no_timestamp
    table, curve, per_p, codes = [], [], [], []
    for r in rows:
        if r.solution is None:
            codes.append(exit_code(r.exception))
            per_p.append({"p": r.p, "error": r.error, "error_kind": r.error_kind})
            curve.append([r.p, "", ""])
            continue
        s = r.summary
        sel = " ".join(str(o + 1) for o in r.solution.selected_outputs)
        table.append([r.p, s.min, s.max, s.mean, s.std_dev, s.q1, s.q2, s.q3, s.iqr, sel])
        curve.append([r.p, r.value, "" if r.marginal is None else r.marginal])
        entry = solution_dict(r.solution, d, timing)
        entry.update(p=r.p, summary=_summary_dict(s), marginal=None if r.marginal is None else num(r.marginal))
        per_p.append(entry)
        effs = r.solution.efficiencies if dmu is None else r.solution.efficiencies[[dmu]]
        report.table(f"histogram_p{r.p}.csv", ["bin_start", "count"], _hist_rows(efficiency_histogram(effs)))
    report.body["rows"] = per_p
    report.table("summary.csv", ["p", "min", "max", "mean", "sd", "q1", "q2", "q3", "iqr", "selected"], table)
    report.table("vcurve.csv", ["p", "value", "marginal"], curve)
    return max(codes, default=EXIT_OK)


def cmd_game(args, report: RunReport) -> int:
    d = _load(args, report)
    cfg = _config(args)
    m = cross_efficiency(d, cfg, workers=args.workers)
    prof = support_profile(m)
    timing = not args.no_timestamp
    ids = list(d.dmu_ids)
    report.body["joint"] = solution_dict(m.joint, d, timing)
    report.body["individual_selections"] = {
        ids[k]: [o + 1 for o in sel] for k, sel in enumerate(m.individual_selections)
    }
    report.body["support"] = {ids[k]: num(v) for k, v in enumerate(prof.pi)}
    report.body["support_over_50"] = int(np.sum(prof.pi >= 50.0))
    report.body["histogram"] = [int(c) for c in prof.bins]
    report.table("delta.csv", ["dmu"] + ids, [[ids[k]] + list(m.delta[k]) for k in range(d.K)])
    report.table("support.csv", ["dmu", "pi", "count"], [[ids[k], prof.pi[k], int(prof.counts[k])] for k in range(d.K)])
    report.table("histogram.csv", ["bin_start", "count"], [[b, int(c)] for b, c in zip(prof.bin_starts(), prof.bins)])
    return EXIT_OK


def cmd_validate(args, report: RunReport) -> int:
    try:
        d = load_dataset(args.data, strict=False)
    except DataError as exc:
        errs = getattr(exc, "errors", [exc])
        report.body["violations"] = [str(e) for e in errs]
        report.body["ok"] = False
        raise RunFailed(EXIT_DATA, str(exc)) from exc
    report.body["dataset"] = dataset_digest(d, False)
    zero = zero_range_outputs(d)
    if zero:
        report.warnings.append("zero range, left unnormalized: " + ", ".join(d.output_names[o] for o in zero))
    violations = d.violations()
    report.body["violations"] = violations
    report.body["ok"] = not violations
    if d.K >= 2:
        rho = correlation_matrix(d)
        report.table("correlation.csv", ["output"] + list(rho.names), [[n] + list(r) for n, r in zip(rho.names, rho.rho)])
    if violations:
        raise RunFailed(EXIT_DATA, "dataset invariant violations:\n" + "\n".join(f"  - {v}" for v in violations))
    return EXIT_OK


def cmd_synth(args, report: RunReport) -> int:
    d = synthetic_dataset(args.K, args.I, args.O, seed=args.seed)
    report.body["dataset"] = dataset_digest(d, False)
    report.body["generator"] = {"K": args.K, "I": args.I, "O": args.O, "seed": args.seed}
    if not args.out:
        raise ConfigError("synth needs --out")
    report.datasets["data.csv"] = d
    return EXIT_OK


COMMANDS = {
    "eff": (cmd_eff, "efficiencies of every DMU for the full or a given output set"),
    "select": (cmd_select, "solve one output-selection problem"),
    "sweep": (cmd_sweep, "solve for a range of p and tabulate the efficiency distribution"),
    "game": (cmd_game, "compare individual selections with the joint one"),
    "validate": (cmd_validate, "check a dataset and emit its output correlation matrix"),
    "synth": (cmd_synth, "write a seeded synthetic dataset"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", help="DMU table (CSV with in:/out: column prefixes)")
    common.add_argument("--config", help="selection config file (key=value lines)")
    common.add_argument("--out", help="directory for report.json and CSV files")
    common.add_argument("--seed", type=int, default=0, help="seed for randomised steps (default 0)")
    common.add_argument("--oracle", action="store_true", help="cross-check select against enumeration")
    common.add_argument("--no-normalize", dest="normalize", action="store_false", help="keep raw output scales")
    common.add_argument("--no-timestamp", action="store_true", help="omit timestamp and timing fields")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="deaselect", description="Output selection for DEA by MILP.")
    parser.add_argument("--version", action="version", version=f"deaselect {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "eff":
            p.add_argument("--outputs", help="comma-separated 1-based output numbers")
        if name in ("select", "sweep"):
            p.add_argument("--mode", choices=("joint", "individual"), default="joint")
            p.add_argument("--dmu", type=int, help="1-based DMU number for --mode individual")
        if name == "sweep":
            p.add_argument("--p-min", type=int)
            p.add_argument("--p-max", type=int)
        if name == "game":
            p.add_argument("--workers", type=int, default=1, help="processes for the individual problems")
        if name == "synth":
            p.add_argument("--K", type=int, required=True)
            p.add_argument("--I", type=int, default=1)
            p.add_argument("--O", type=int, required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    report = RunReport(["deaselect"] + argv, __version__)
    func = COMMANDS[args.command][0]
    try:
        if args.command != "synth" and not args.data:
            raise ConfigError("--data is required")
        code = func(args, report)
    except RunFailed as exc:
        code = exc.code
        print(f"error: {exc}", file=sys.stderr)
    except DeaError as exc:
        code = exit_code(exc)
        where = getattr(exc, "subproblem", None)
        print(f"error: {where + ': ' if where else ''}{exc}", file=sys.stderr)
        report.body["error"] = {"kind": type(exc).__name__, "message": str(exc)}
    except OSError as exc:
        code = EXIT_DATA
        print(f"error: {exc}", file=sys.stderr)
        report.body["error"] = {"kind": type(exc).__name__, "message": str(exc)}
    report.body["exit_code"] = code
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.out:
        report.write(Path(args.out), timestamp=not args.no_timestamp)
    else:
        sys.stdout.write(report.to_json(timestamp=not args.no_timestamp))
    return code


if __name__ == "__main__":
    sys.exit(main())
