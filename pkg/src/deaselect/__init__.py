"""Output selection for Data Envelopment Analysis by mixed-integer programming."""

from .config import Cluster, SelectionConfig, load_config, parse_config
from .data import (
    Dataset,
    EfficiencySummary,
    correlation_matrix,
    load_dataset,
    normalize_outputs,
    summarize,
    write_dataset,
)
from .efficiency import ActiveSet, DeaEvaluator, all_efficiencies, efficiency
from .errors import (
    ConfigError,
    DataError,
    DeaError,
    SolverError,
    StructurallyInfeasible,
)
from .game import cross_efficiency, support_profile
from .greedy import greedy_nested
from .oracle import enumerate_best, single_input_p1_value
from .selection import SelectionSolution, solve_selection, sweep_p
from .synth import synthetic_dataset

__version__ = "0.1.0"

__all__ = [
    "ActiveSet",
    "Cluster",
    "ConfigError",
    "DataError",
    "Dataset",
    "DeaError",
    "DeaEvaluator",
    "EfficiencySummary",
    "SelectionConfig",
    "SelectionSolution",
    "SolverError",
    "StructurallyInfeasible",
    "all_efficiencies",
    "correlation_matrix",
    "cross_efficiency",
    "efficiency",
    "enumerate_best",
    "greedy_nested",
    "load_config",
    "load_dataset",
    "normalize_outputs",
    "parse_config",
    "single_input_p1_value",
    "solve_selection",
    "summarize",
    "support_profile",
    "sweep_p",
    "synthetic_dataset",
    "write_dataset",
]
