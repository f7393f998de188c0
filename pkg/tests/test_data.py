"""Dataset ingestion, normalisation, correlation and summaries."""

import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra.numpy import arrays

from deaselect.data import (
    Dataset,
    ZeroRangeWarning,
    correlation_matrix,
    load_dataset,
    normalize_outputs,
    summarize,
    threshold_rule_matrix,
    write_dataset,
)
from deaselect.errors import (
    DataError,
    DataErrors,
    DuplicateDmuId,
    EmptyVector,
    MissingColumn,
    NegativeValue,
    NonNumericCell,
    TooFewRows,
)

from conftest import nested_dataset, nonconcave_dataset


def _csv(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# -- loading -------------------------------------------------------------------

def test_load_nonconcave_table(tmp_path):
    p = tmp_path / "t.csv"
    write_dataset(nonconcave_dataset(), p)
    d = load_dataset(p)
    assert (d.K, d.I, d.O) == (5, 1, 4)
    assert np.array_equal(d.outputs, nonconcave_dataset().outputs)


def test_load_minimal(tmp_path):
    d = load_dataset(_csv(tmp_path, "id,in:x1,out:y1\nA,1,1\n"))
    assert (d.K, d.I, d.O) == (1, 1, 1)
    assert d.dmu_ids == ("A",)


def test_unicode_minus_is_negative(tmp_path):
    with pytest.raises(NegativeValue) as err:
        load_dataset(_csv(tmp_path, "id,in:x1,out:y1\nA,1,−0.5\n"))
    assert err.value.row == 1 and err.value.col == "out:y1"


def test_non_numeric_cell(tmp_path):
    with pytest.raises(NonNumericCell) as err:
        load_dataset(_csv(tmp_path, "id,in:x1,out:y1\nA,1,1\nB,abc,2\n"))
    assert err.value.row == 2 and err.value.text == "abc"


def test_duplicate_ids(tmp_path):
    with pytest.raises(DuplicateDmuId):
        load_dataset(_csv(tmp_path, "id,in:x1,out:y1\nA,1,1\nA,1,2\n"))


def test_missing_output_column(tmp_path):
    with pytest.raises(MissingColumn):
        load_dataset(_csv(tmp_path, "id,in:x1,in:x2\nA,1,1\n"))


def test_unprefixed_column_rejected(tmp_path):
    with pytest.raises(MissingColumn):
        load_dataset(_csv(tmp_path, "id,x1,out:y1\nA,1,1\n"))


def test_all_errors_collected(tmp_path):
    with pytest.raises(DataErrors) as err:
        load_dataset(_csv(tmp_path, "id,in:x1,out:y1\nA,-1,1\nB,1,zz\n"))
    kinds = {type(e) for e in err.value.errors}
    assert kinds == {NegativeValue, NonNumericCell}


def test_schema_roles(tmp_path):
    p = _csv(tmp_path, "name,labour,sales\nA,2,3\nB,1,1\n")
    d = load_dataset(p, schema={"name": "id", "labour": "input", "sales": "output"})
    assert d.input_names == ("labour",) and d.output_names == ("sales",)


def test_all_zero_input_row_rejected(tmp_path):
    p = _csv(tmp_path, "id,in:x1,out:y1\nA,0,1\nB,1,1\n")
    with pytest.raises(DataError):
        load_dataset(p)
    d = load_dataset(p, strict=False)
    assert d.violations() == ["DMU A: all inputs are zero"]


def test_dataset_is_read_only():
    d = nested_dataset()
    with pytest.raises(ValueError):
        d.outputs[0, 0] = 5.0


def test_write_load_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    d = Dataset.from_arrays(rng.uniform(0, 10, (6, 2)), rng.uniform(0, 1, (6, 3)))
    p = tmp_path / "r.csv"
    write_dataset(d, p)
    back = load_dataset(p)
    assert np.array_equal(back.inputs, d.inputs) and np.array_equal(back.outputs, d.outputs)
    assert back.dmu_ids == d.dmu_ids


# -- normalisation -------------------------------------------------------------

def _one_output(col):
    return Dataset.from_arrays(np.ones((len(col), 1)), np.array(col, dtype=float)[:, None])


def test_normalize_divides_by_range():
    out = normalize_outputs(_one_output([0.2, 0.4, 0.6, 0.8])).outputs[:, 0]
    assert np.allclose(out, [1 / 3, 2 / 3, 1.0, 4 / 3])


def test_normalize_constant_column_unchanged():
    with pytest.warns(ZeroRangeWarning, match="zero range, left unnormalized"):
        out = normalize_outputs(_one_output([2.0, 2.0, 2.0])).outputs[:, 0]
    assert np.array_equal(out, [2.0, 2.0, 2.0])


def test_normalize_nonconcave_first_output():
    out = normalize_outputs(nonconcave_dataset()).outputs[:, 0]
    assert np.allclose(out, [1.5, 1.75, 2.0, 2.25, 2.5])


def test_normalize_leaves_inputs():
    d = Dataset.from_arrays([[3.0], [5.0]], [[1.0], [2.0]])
    assert np.array_equal(normalize_outputs(d).inputs, d.inputs)


@given(arrays(float, (5, 3), elements=st.floats(0, 100, allow_nan=False)))
def test_normalized_ranges_are_one(y):
    d = Dataset.from_arrays(np.ones((5, 1)), y)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroRangeWarning)
        n = normalize_outputs(normalize_outputs(d))
    rng = n.outputs.max(0) - n.outputs.min(0)
    orig = y.max(0) - y.min(0)
    for r, o in zip(rng, orig):
        if o > 0:
            assert r == pytest.approx(1.0, rel=1e-9)
        else:
            assert r == 0


# -- correlation ---------------------------------------------------------------

def test_identical_columns_correlate():
    d = Dataset.from_arrays(np.ones((3, 1)), [[1, 1], [2, 2], [4, 4]])
    assert correlation_matrix(d).rho[0, 1] == pytest.approx(1.0)


def test_two_row_anticorrelation():
    d = Dataset.from_arrays(np.ones((2, 1)), [[1.0, 3.0], [3.0, 1.0]])
    assert correlation_matrix(d).rho[0, 1] == pytest.approx(-1.0)


def test_nested_table_outputs_two_three():
    rho = correlation_matrix(nested_dataset()).rho
    assert rho[1, 2] == pytest.approx(-1.0)
    assert np.allclose(rho, rho.T)


def test_zero_variance_gets_zero():
    d = Dataset.from_arrays(np.ones((3, 1)), [[1, 5], [2, 5], [3, 5]])
    rho = correlation_matrix(d).rho
    assert rho[0, 1] == 0 and rho[1, 1] == 0 and rho[0, 0] == 1


def test_correlation_needs_two_rows():
    with pytest.raises(TooFewRows):
        correlation_matrix(Dataset.from_arrays([[1.0]], [[1.0, 2.0]]))


@given(
    arrays(float, (6, 3), elements=st.floats(0, 10, allow_nan=False)),
    st.floats(0.1, 10),
    st.floats(-5, 5),
)
def test_correlation_affine_invariant(y, scale, shift):
    assume(np.all(y.std(0) > 1e-3))
    d = Dataset.from_arrays(np.ones((6, 1)), y)
    y2 = y.copy()
    y2[:, 0] = scale * y2[:, 0] + shift + 10.0
    d2 = Dataset.from_arrays(np.ones((6, 1)), y2)
    assert np.allclose(correlation_matrix(d).rho, correlation_matrix(d2).rho, atol=1e-9)


def test_threshold_rule_examples():
    assert not threshold_rule_matrix(np.zeros((3, 3)), 0.9).any()
    rho = np.eye(3)
    rho[1, 2] = rho[2, 1] = 0.95
    r = threshold_rule_matrix(rho, 0.9)
    assert r[1, 2] == r[2, 1] == 1 and r.sum() == 2
    full = threshold_rule_matrix(np.random.default_rng(0).uniform(-1, 1, (4, 4)), -1.0)
    assert np.array_equal(full, 1 - np.eye(4, dtype=int))


def test_threshold_out_of_range():
    with pytest.raises(ValueError):
        threshold_rule_matrix(np.eye(2), 1.5)


# -- summaries -----------------------------------------------------------------

def test_summary_constant():
    s = summarize([1, 1, 1])
    assert (s.min, s.max, s.mean, s.q1, s.q2, s.q3, s.std_dev, s.iqr) == (1, 1, 1, 1, 1, 1, 0, 0)


def test_summary_mean_of_quoted_vector():
    assert summarize([0.85, 0.95, 0.9, 1.0]).mean == pytest.approx(0.925)


def test_summary_linear_quartiles():
    s = summarize([0.0, 1.0])
    assert s.q2 == pytest.approx(0.5) and s.iqr == pytest.approx(0.5)


def test_summary_empty():
    with pytest.raises(EmptyVector):
        summarize([])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30))
def test_summary_ordering(e):
    s = summarize(e)
    assert s.min <= s.q1 <= s.q2 <= s.q3 <= s.max
    assert s.min - 1e-12 <= s.mean <= s.max + 1e-12
    assert s.iqr == pytest.approx(s.q3 - s.q1)
    assert s.std_dev <= s.max - s.min + 1e-12
    assert all(0 <= v <= 1 for v in s.as_dict().values())


def test_summary_population_sd():
    assert summarize([0.0, 1.0]).std_dev == pytest.approx(0.5)
    assert not math.isnan(summarize([0.3]).std_dev)
