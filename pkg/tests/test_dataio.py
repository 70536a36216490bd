import json

import numpy as np
import pytest

from starmetric import LUKASIEWICZ, STAR_P, DomainError, induced_metric, product_max
from starmetric.dataio import (IngestError, grid_to_csv, grid_to_pgm, ingest, parse_csv,
                               parse_inline_points, parse_json, read_pgm, write_atomic)
from starmetric.metric import signed_line_space
from starmetric.topology import ball_grid


def test_csv_with_header():
    ds = parse_csv("x,y\n1,2\n3.5,-4e1\n")
    np.testing.assert_array_equal(ds.points, [[1, 2], [3.5, -40]])
    assert ds.arity == 2 and len(ds) == 2


def test_csv_without_header_and_blank_lines():
    ds = parse_csv("1\n\n16\n25\n")
    assert ds.points.ravel().tolist() == [1, 16, 25]


def test_csv_reports_bad_cell_position():
    with pytest.raises(IngestError) as info:
        parse_csv("1,2\n3,abc\n")
    assert (info.value.row, info.value.col) == (2, 2)
    assert "row 2 col 2" in str(info.value)


@pytest.mark.parametrize("text", ["1,2\n3\n", ""])
def test_csv_rejects_ragged_or_empty(text):
    with pytest.raises(IngestError):
        parse_csv(text)


def test_csv_rejects_nan_and_inf():
    with pytest.raises(IngestError):
        parse_csv("1\nnan\n")
    with pytest.raises(IngestError):
        parse_csv("1\ninf\n")


def test_json_points():
    assert parse_json("[[1, 2], [3, 4]]").points.tolist() == [[1, 2], [3, 4]]
    assert parse_json("[1, 16, 25]").points.ravel().tolist() == [1, 16, 25]


@pytest.mark.parametrize("text", ['{"a": 1}', "[[1, true]]", '[["1"]]', "[1, NaN]", "[1,", "[]"])
def test_json_rejects_bad_input(text):
    with pytest.raises(IngestError):
        parse_json(text)


def test_ingest_by_extension(tmp_path):
    (tmp_path / "p.json").write_text(json.dumps([[1.0], [4.0]]))
    (tmp_path / "p.csv").write_text("v\n1\n4\n")
    space = induced_metric(STAR_P)
    assert ingest(tmp_path / "p.json", space=space).format == "json"
    assert ingest(tmp_path / "p.csv", space=space).format == "csv"
    with pytest.raises(IngestError):
        ingest(tmp_path / "missing.csv")


def test_validation_names_row(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("1\n2\n-3\n")
    with pytest.raises(DomainError, match="row 3"):
        ingest(path, space=induced_metric(STAR_P))
    with pytest.raises(IngestError, match="arity"):
        ingest(path, space=product_max([induced_metric(STAR_P)] * 2))


def test_inline_points():
    assert parse_inline_points("1,16,25", 1).ravel().tolist() == [1, 16, 25]
    assert parse_inline_points("0,0;1,2", 2).tolist() == [[0, 0], [1, 2]]
    with pytest.raises(IngestError):
        parse_inline_points("", 1)
    with pytest.raises(IngestError):
        parse_inline_points("0,0;1", 2)
    with pytest.raises(IngestError):
        parse_inline_points("1,x", 1)


@pytest.fixture
def grid():
    line = signed_line_space(LUKASIEWICZ)
    return ball_grid(product_max([line, line]), [0, 0], 1.0, (-1.5, 1.5, -1.5, 1.5), 7)


def test_pgm_round_trip(grid):
    text = grid_to_pgm(grid, "a comment\nsecond line")
    lines = text.splitlines()
    assert lines[0] == "P2"
    assert lines[1] == "# a comment"
    assert lines[3] == "7 7" and lines[4] == "2"
    np.testing.assert_array_equal(read_pgm(text), grid.values)


def test_csv_grid_layout(grid):
    rows = grid_to_csv(grid).splitlines()
    assert rows[0] == "x,y,value"
    assert len(rows) == 1 + 49
    x, y, v = rows[1].split(",")
    assert (float(x), float(y), int(v)) == (-1.5, 1.5, 0)
    x, y, v = rows[1 + 3 * 7 + 3].split(",")
    assert (float(x), float(y), int(v)) == (0.0, 0.0, 1)


def test_read_pgm_rejects_other_formats():
    from starmetric import UsageError
    with pytest.raises(UsageError):
        read_pgm("P5\n1 1\n2\n0\n")
    with pytest.raises(UsageError):
        read_pgm("P2\n2 2\n2\n0 1 2\n")


def test_write_atomic(tmp_path):
    target = tmp_path / "out.txt"
    target.write_text("old")
    write_atomic(target, "new")
    assert target.read_text() == "new"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]
