"""Nested greedy forward selection."""

import numpy as np
import pytest

from deaselect.config import SelectionConfig
from deaselect.efficiency import DeaEvaluator
from deaselect.greedy import greedy_nested
from deaselect.oracle import enumerate_best

from conftest import corpus, nested_dataset, nonconcave_dataset


def test_nested_table_p1():
    tr = greedy_nested(nested_dataset(), 1)
    assert tr.order == (0,)
    assert tr.values[-1] == pytest.approx(0.925)


def test_nested_table_p2_is_suboptimal():
    tr = greedy_nested(nested_dataset(), 2)
    assert tr.order == (0, 2)
    assert tr.values[-1] == pytest.approx(0.98175, abs=1e-4)
    assert tr.values[-1] < 1.0 - 1e-3


def test_nonconcave_table_p1():
    tr = greedy_nested(nonconcave_dataset(), 1)
    assert tr.order == (0,) and tr.values[-1] == pytest.approx(0.8)


def test_trace_prefixes_nested():
    d = corpus(1, seed=4)[0]
    tr = greedy_nested(d, d.O)
    for t in range(1, d.O + 1):
        assert tr.prefix(t) == tuple(sorted(tr.order[:t]))
        assert set(tr.prefix(t - 1)) <= set(tr.prefix(t))
    assert all(b >= a - 1e-9 for a, b in zip(tr.values, tr.values[1:]))
    assert len(tr.efficiencies) == d.K


def test_weighted_objective():
    d = nested_dataset()
    w = (0.0, 0.0, 4.0, 0.0)
    tr = greedy_nested(d, 1, "weighted", w)
    # only DMU 3 counts; its best single output is output 1 (0.9)
    assert tr.order == (0,) and tr.values[-1] == pytest.approx(0.9)


def test_rejects_nonlinear_objectives():
    with pytest.raises(ValueError):
        greedy_nested(nested_dataset(), 1, "min")


@pytest.mark.parametrize("idx", range(15))
def test_greedy_lower_bounds_exact(idx):
    d = corpus(15, seed=77)[idx]
    ev = DeaEvaluator(d)
    tr = greedy_nested(d, d.O, evaluator=ev)
    for p in range(1, d.O + 1):
        exact = enumerate_best(d, SelectionConfig(p=p), evaluator=ev).objective_value
        assert tr.values[p - 1] <= exact + 1e-6
    assert tr.values[-1] == pytest.approx(np.mean(ev.efficiencies()), abs=1e-9)
