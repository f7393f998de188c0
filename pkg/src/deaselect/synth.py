"""Seeded synthetic DMU tables for benchmarks and demos."""

from __future__ import annotations

import numpy as np

from .data import Dataset


def synthetic_dataset(K: int, I: int, O: int, seed: int = 0) -> Dataset:  # noqa: E741
    """K DMUs with inputs drawn from U(1, 2) and outputs from U(0.1, 1).

    The draws come from ``numpy.random.default_rng(seed)``: inputs first
    (K x I), then outputs (K x O). Ids are "1".."K".
    """
    if K < 1 or I < 1 or O < 1:
        raise ValueError("K, I and O must be positive")
    rng = np.random.default_rng(seed)
    x = rng.uniform(1.0, 2.0, (K, I))
    y = rng.uniform(0.1, 1.0, (K, O))
    return Dataset.from_arrays(x, y)
