import logging

import numpy as np
import pytest

from components.moment_tensors import (
    CSV_COLUMNS,
    MomentTensorRecord,
    edit_dataset,
    extract_tbp_frame,
    filter_region,
    ingest_moment_tensors,
    write_moment_tensors,
)
from utils.errors import DegenerateSpectrum, InvalidInput, ParseError

SAMPLE_PATH = "data/moment_tensors_sample.csv"


def _write(tmp_path, text):
    path = tmp_path / "tensors.csv"
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_tbp_axes_of_a_diagonal_tensor():
    frame = extract_tbp_frame(np.diag([1.0, 0.0, -1.0]))
    assert frame.labels == ("T", "B", "P")
    assert np.allclose(frame.matrix, np.eye(3))


def test_tbp_axes_follow_descending_eigenvalues():
    frame = extract_tbp_frame(np.diag([-2.0, 3.0, -1.0]))
    assert np.allclose(np.abs(frame.matrix), np.eye(3)[:, [1, 2, 0]])


def test_repeated_eigenvalue_is_rejected():
    with pytest.raises(DegenerateSpectrum):
        extract_tbp_frame(MomentTensorRecord("E1", (1.0, 1.0, -2.0, 0.0, 0.0, 0.0)))


def test_record_matrix_layout():
    record = MomentTensorRecord("E1", (1.0, 2.0, 3.0, 4.0, 5.0, 6.0), "2")
    assert np.array_equal(record.matrix, [[1.0, 4.0, 5.0], [4.0, 2.0, 6.0], [5.0, 6.0, 3.0]])
    assert record.trace == 6.0
    assert MomentTensorRecord.from_matrix("E1", record.matrix, "2") == record
    assert np.all(np.diff(record.eigenvalues) <= 0)


def test_ingest_sample_file():
    records = ingest_moment_tensors(SAMPLE_PATH)
    assert len(records) == 37
    region2 = filter_region(records, "2")
    assert len(region2) == 21
    assert region2[0].event_id == "R2-01"
    assert filter_region(records) == records


def test_missing_column_reports_header_position(tmp_path):
    path = _write(tmp_path, "event_id,m11,m22,m33,m12,m13\nE1,1,0,-1,0,0\n")
    with pytest.raises(ParseError) as info:
        ingest_moment_tensors(path)
    assert info.value.line == 1
    assert info.value.column == 7


def test_bad_number_reports_line_and_column(tmp_path):
    path = _write(
        tmp_path,
        "event_id,m11,m22,m33,m12,m13,m23,region\n"
        "E1,1,0,-1,0,0,0,1\n"
        "E2,1,zero,-1,0,0,0,1\n",
    )
    with pytest.raises(ParseError) as info:
        ingest_moment_tensors(path)
    assert (info.value.line, info.value.column) == (3, 3)


def test_non_finite_and_empty_id_rejected(tmp_path):
    path = _write(tmp_path, "event_id,m11,m22,m33,m12,m13,m23,region\nE1,inf,0,-1,0,0,0,\n")
    with pytest.raises(ParseError):
        ingest_moment_tensors(path)
    path = _write(tmp_path, "event_id,m11,m22,m33,m12,m13,m23,region\n,1,0,-1,0,0,0,\n")
    with pytest.raises(ParseError):
        ingest_moment_tensors(path)


def test_empty_file_is_a_parse_error(tmp_path):
    with pytest.raises(ParseError):
        ingest_moment_tensors(_write(tmp_path, ""))


def test_region_is_optional_and_trace_warns(tmp_path, caplog):
    path = _write(tmp_path, "event_id,m11,m22,m33,m12,m13,m23\nE1,1,1,0.5,0,0,0\n")
    with caplog.at_level(logging.WARNING):
        records = ingest_moment_tensors(path)
    assert records[0].region is None
    assert "trace" in caplog.text


def test_write_then_ingest_preserves_values(tmp_path):
    records = ingest_moment_tensors(SAMPLE_PATH)[:5]
    path = str(tmp_path / "out.csv")
    write_moment_tensors(records, path)
    with open(path, encoding="utf-8") as f:
        assert f.readline().strip() == ",".join(CSV_COLUMNS)
    assert ingest_moment_tensors(path) == records


def test_filter_unknown_region():
    with pytest.raises(InvalidInput):
        filter_region(ingest_moment_tensors(SAMPLE_PATH), "9")


def test_edit_dataset_drop_and_duplicate():
    rows = list(range(21))
    edited = edit_dataset(rows, [17, 19], {"18": 2, "20": 2})
    assert len(edited) == 23
    assert edited[:17] == list(range(17))
    assert edited[17:19] == [18, 20]
    assert edited[19:] == [18, 18, 20, 20]
    with pytest.raises(InvalidInput):
        edit_dataset(rows, [21])
    with pytest.raises(InvalidInput):
        edit_dataset(rows, [], {"-1": 1})
