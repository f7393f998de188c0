"""Brute-force enumeration, and the one-input closed form it must agree with."""

import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from deaselect.config import SelectionConfig
from deaselect.data import Dataset
from deaselect.efficiency import DeaEvaluator
from deaselect.errors import CapExceeded, StructurallyInfeasible
from deaselect.oracle import enumerate_best, single_input_p1_value
from deaselect.selection import solve_selection

from conftest import corpus, nested_dataset, nonconcave_dataset


def test_nonconcave_joint_examples():
    d = nonconcave_dataset()
    got = [enumerate_best(d, SelectionConfig(p=p)) for p in (1, 2, 3)]
    assert [g.selected_outputs for g in got] == [(0,), (0, 1), (1, 2, 3)]
    assert [g.objective_value for g in got] == pytest.approx([0.8, 0.8667, 1.0], abs=1e-4)


def test_nested_joint_example():
    s = enumerate_best(nested_dataset(), SelectionConfig(p=2))
    assert s.selected_outputs == (1, 2) and s.objective_value == pytest.approx(1.0)


def test_single_dmu():
    d = Dataset.from_arrays([[2.0]], [[0.5, 3.0]])
    s = enumerate_best(d, SelectionConfig(p=1))
    assert s.objective_value == pytest.approx(1.0) and s.selected_outputs == (0,)


def test_visits_every_subset():
    d = nonconcave_dataset()
    s = enumerate_best(d, SelectionConfig(p=2))
    assert s.outcome.nodes == 6 and s.outcome.gap == 0.0


def test_cap():
    d = Dataset.from_arrays(np.ones((2, 1)), np.ones((2, 20)))
    with pytest.raises(CapExceeded):
        enumerate_best(d, SelectionConfig(p=10), cap=1000)
    enumerate_best(d, SelectionConfig(p=1), cap=20)


def test_nothing_admissible():
    cfg = SelectionConfig(p=2, conflict_pairs=tuple(itertools.combinations(range(3), 2)))
    with pytest.raises(StructurallyInfeasible):
        enumerate_best(nested_dataset(), cfg)


def test_quadratic_reported_as_loss():
    s = enumerate_best(nonconcave_dataset(), SelectionConfig(p=1, objective="quadratic"))
    e = s.efficiencies
    assert s.objective_value == pytest.approx(((1 - e) ** 2).mean())
    assert s.objective_value >= 0


# -- closed form ------------------------------------------------------------------

@pytest.mark.parametrize("k,expected", [(0, (2, 1.0)), (2, (0, 0.9))])
def test_closed_form_nested(k, expected):
    o, v = single_input_p1_value(nested_dataset(), k)
    assert o == expected[0] and v == pytest.approx(expected[1])


def test_closed_form_tie_lowest_index():
    assert single_input_p1_value(nonconcave_dataset(), 4) == (0, pytest.approx(1.0))


def test_closed_form_rejects_two_inputs():
    with pytest.raises(ValueError):
        single_input_p1_value(Dataset.from_arrays([[1.0, 1.0]], [[1.0]]), 0)


@given(arrays(float, (5, 4), elements=st.floats(0.05, 3.0)), arrays(float, (5, 1), elements=st.floats(0.1, 3.0)))
def test_closed_form_matches_enumeration(y, x):
    d = Dataset.from_arrays(x, y)
    ev = DeaEvaluator(d)
    for k in range(d.K):
        o, v = single_input_p1_value(d, k)
        s = enumerate_best(d, SelectionConfig(p=1), "individual", k, evaluator=ev)
        assert s.objective_value == pytest.approx(v, abs=1e-9)


# -- enumeration agrees with branch-and-bound ---------------------------------------

@pytest.mark.parametrize("idx", range(10))
@pytest.mark.parametrize("objective", ["average", "min", "quadratic", "percentile"])
def test_enumeration_agrees_with_solver(idx, objective):
    d = corpus(10, seed=55)[idx]
    ev = DeaEvaluator(d)
    extra = {"pi": 50.0} if objective == "percentile" else {}
    p = 1 + idx % d.O
    cfg = SelectionConfig(p=p, objective=objective, **extra)
    a = enumerate_best(d, cfg, evaluator=ev)
    b = solve_selection(d, cfg, evaluator=ev)
    assert a.objective_value == pytest.approx(b.objective_value, abs=1e-6)
