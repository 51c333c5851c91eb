from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from obslae import cases, textio
from obslae.errors import DimensionError
from obslae.textio import ParseError

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=100, deadline=None)
@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, max_side=6), elements=finite))
def test_matrix_round_trip_is_bit_exact(a):
    back = textio.parse(textio.format_matrix(a)).blocks[0].values
    assert back.shape == a.shape
    assert np.array_equal(back.view(np.uint64), a.view(np.uint64)) or np.array_equal(back, a)


def test_parse_comments_labels_and_directives():
    doc = textio.parse("# header\n@epsilon 1e-6\nG 2 2  # trailing\n1 2\n\n3 4\nY 2 1\n5\n6\n")
    blocks = doc.labelled("G", "Y")
    assert np.array_equal(blocks["G"].values, [[1, 2], [3, 4]])
    assert doc.directive("epsilon", float) == 1e-6
    assert doc.directive("missing", float, 7.0) == 7.0


def test_unlabelled_blocks_are_positional():
    doc = textio.parse("1 2\n1 2\n1 1\n3\n")
    blocks = doc.labelled("G", "Y")
    assert blocks["Y"].values.shape == (1, 1)


def test_ragged_row_reports_line_and_column():
    with pytest.raises(ParseError) as err:
        textio.parse("G 2 3\n1 2 3\n4 5\n", "bad.txt")
    assert (err.value.line, err.value.source) == (3, "bad.txt")
    assert "bad.txt:3:" in str(err.value)


def test_non_finite_value_rejected():
    with pytest.raises(ParseError) as err:
        textio.parse("1 3\n1 nan 2\n")
    assert (err.value.line, err.value.column) == (2, 3)


def test_bad_token_and_truncated_block():
    with pytest.raises(ParseError, match="not a number"):
        textio.parse("1 2\n1 x\n")
    with pytest.raises(ParseError, match="expected 3"):
        textio.parse("3 1\n1\n2\n")
    with pytest.raises(ParseError):
        textio.parse("2 0\n")


def test_problem_round_trip(tmp_path):
    path = tmp_path / "p.txt"
    path.write_text(textio.format_problem(cases.DEMO_G, cases.DEMO_Y_SOLVABLE, gain="sigma", epsilon=1e-7))
    pf = textio.load_problem(path)
    assert np.array_equal(pf.g, cases.DEMO_G) and np.array_equal(pf.y_d, cases.DEMO_Y_SOLVABLE)
    assert pf.gain == "sigma" and pf.epsilon == 1e-7 and pf.u0 is None


def test_problem_dimension_mismatch(tmp_path):
    path = tmp_path / "p.txt"
    path.write_text("G 2 2\n1 0\n0 1\nY 3 1\n1\n2\n3\n")
    with pytest.raises(ParseError, match="rows"):
        textio.load_problem(path)
    path.write_text("@u0 1 2 3\nG 2 2\n1 0\n0 1\nY 2 1\n1\n2\n")
    with pytest.raises(ParseError, match="u0"):
        textio.load_problem(path)


def test_missing_file():
    with pytest.raises(ParseError, match="cannot read"):
        textio.load("/nonexistent/problem.txt")


def test_shipped_demo_files_match_builtin_data():
    pf = textio.load_problem(Path(textio.__file__).parent / "data" / "demo_solvable.txt")
    assert np.array_equal(pf.g, cases.DEMO_G) and np.array_equal(pf.y_d, cases.DEMO_Y_SOLVABLE)
    assert np.array_equal(pf.u0, cases.DEMO_U0) and pf.epsilon == cases.DEMO_EPSILON


def test_shipped_tracking_plant_matches_builtin_data():
    data = Path(textio.__file__).parent / "data"
    plant = textio.load_plant(data / "tracking_plant.txt")
    ref = cases.tracking_plant()
    for name in ("a", "b", "c", "x0", "v"):
        assert np.array_equal(getattr(plant, name), getattr(ref, name))
    assert plant.horizon_n == 30
    assert np.array_equal(textio.load_matrix(data / "tracking_reference.txt"), cases.tracking_reference())


def test_plant_round_trip(tmp_path):
    plant = cases.tracking_plant()
    path = tmp_path / "plant.txt"
    path.write_text(textio.format_plant(plant))
    back = textio.load_plant(path)
    assert np.array_equal(back.v, plant.v) and np.array_equal(back.a, plant.a)


def test_plant_needs_horizon(tmp_path):
    path = tmp_path / "plant.txt"
    path.write_text("A 1 1\n1\nB 1 1\n1\nC 1 1\n1\nx0 1 1\n0\n")
    with pytest.raises(ParseError, match="horizon"):
        textio.load_plant(path)


def test_load_vector_rejects_matrix(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text("2 2\n1 2\n3 4\n")
    with pytest.raises(DimensionError):
        textio.load_vector(path)
