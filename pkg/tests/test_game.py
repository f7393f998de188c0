"""Cross-efficiency of individual selections against the joint one."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from deaselect.config import SelectionConfig
from deaselect.data import Dataset
from deaselect.efficiency import DeaEvaluator
from deaselect.game import N_BINS, SupportProfile, cross_efficiency, support_profile

from conftest import corpus, nested_dataset


def test_nested_nobody_gains():
    m = cross_efficiency(nested_dataset(), SelectionConfig(p=2))
    assert m.joint_selection == (1, 2)
    # the joint selection already makes every DMU efficient, so nobody gains
    assert np.all(m.delta <= 1e-9)
    prof = support_profile(m)
    assert np.all(prof.pi == 0) and prof.bins[0] == 4 and prof.bins.sum() == 4


def test_single_output_everyone_agrees():
    d = Dataset.from_arrays(np.ones((3, 1)), [[1.0], [2.0], [3.0]])
    m = cross_efficiency(d, SelectionConfig(p=1))
    assert np.array_equal(m.delta, np.zeros((3, 3)))


def test_bins_half_support():
    delta = np.zeros((4, 4))
    delta[0, 1] = delta[2, 1] = 0.1
    prof = support_profile(delta)
    assert prof.pi[1] == 50.0 and prof.bins[10] == 1 and prof.bins[0] == 3


def test_bins_edges():
    delta = np.array([[0.0, 0.2], [0.0, 0.3]])
    prof = support_profile(delta)
    assert list(prof.pi) == [0.0, 100.0]
    assert prof.bins[0] == 1 and prof.bins[N_BINS - 1] == 1


def test_bin_starts():
    assert SupportProfile.bin_starts() == list(range(0, 100, 5))


def test_tolerance_excludes_noise():
    delta = np.array([[0.0, 5e-7], [0.0, 2e-6]])
    assert list(support_profile(delta).counts) == [0, 1]


@given(arrays(float, (7, 7), elements=st.floats(-1, 1)))
def test_bins_count_columns(delta):
    prof = support_profile(delta)
    assert prof.bins.sum() == 7
    assert np.all((prof.pi >= 0) & (prof.pi <= 100))
    for c, b in zip(prof.counts, prof.pi):
        assert b == pytest.approx(100 * c / 7)


@pytest.mark.parametrize("idx", range(6))
def test_cross_efficiency_consistent(idx):
    d = corpus(6, seed=8)[idx]
    p = 1 + idx % d.O
    m = cross_efficiency(d, SelectionConfig(p=p))
    ev = DeaEvaluator(d)
    # each DMU does at least as well under its own selection
    assert np.all(np.diag(m.delta) >= -1e-6)
    for j, S in enumerate(m.individual_selections):
        assert np.allclose(m.delta[:, j], ev.efficiencies(S) - ev.efficiencies(m.joint_selection), atol=1e-9)
    assert np.all(m.delta <= 1 + 1e-9) and np.all(m.delta >= -1 - 1e-9)


def test_workers_give_same_matrix():
    d = corpus(1, seed=3)[0]
    cfg = SelectionConfig(p=2)
    a = cross_efficiency(d, cfg)
    b = cross_efficiency(d, cfg, workers=2)
    assert np.array_equal(a.delta, b.delta)
    assert a.individual_selections == b.individual_selections
