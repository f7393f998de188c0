"""Exception types raised by the data, model and selection layers."""

from __future__ import annotations


class DeaError(Exception):
    """Base class for errors raised by deaselect."""


class DataError(DeaError, ValueError):
    """Input data is malformed or breaks a Dataset invariant."""


class MissingColumn(DataError):
    pass


class NegativeValue(DataError):
    def __init__(self, row: int, col: str, value: float):
        self.row, self.col, self.value = row, col, value
        super().__init__(f"row {row}, column {col!r}: negative value {value!r}")


class NonNumericCell(DataError):
    def __init__(self, row: int, col: str, text: str):
        self.row, self.col, self.text = row, col, text
        super().__init__(f"row {row}, column {col!r}: cannot parse {text!r} as a number")


class DuplicateDmuId(DataError):
    def __init__(self, dmu_id: str, rows: tuple[int, int]):
        self.dmu_id, self.rows = dmu_id, rows
        super().__init__(f"DMU id {dmu_id!r} appears on rows {rows[0]} and {rows[1]}")


class TooFewRows(DataError):
    pass


class EmptyVector(DataError):
    pass


class DataErrors(DataError):
    """Several data problems collected in one pass."""

    def __init__(self, errors: list[DataError]):
        self.errors = list(errors)
        lines = "\n".join(f"  - {e}" for e in self.errors)
        super().__init__(f"{len(self.errors)} data error(s):\n{lines}")


class NormalizationInfeasible(DeaError):
    """Every active input of a DMU is zero, so the input normalisation row cannot hold."""


class StructurallyInfeasible(DeaError):
    """A selection configuration that can never be satisfied, detected before solving."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class ConfigError(DeaError, ValueError):
    pass


class BadWeights(ConfigError):
    pass


class BadPercentile(ConfigError):
    pass


class CapExceeded(DeaError):
    def __init__(self, count: int, cap: int):
        self.count, self.cap = count, cap
        super().__init__(f"enumeration needs {count} subsets, above the cap of {cap}")


class SolverError(DeaError):
    """The optimisation layer failed to return a usable answer."""


class ConsistencyError(SolverError):
    """Recomputed efficiencies disagree with the solver's own objective."""
