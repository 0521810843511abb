import json

import numpy as np
import pytest

from src.cohortdata import Cohort, CohortParseError, parse_cohort, serialize_cohort


def write_lines(path, header, patients):
    path.write_text(
        "\n".join(json.dumps(obj) for obj in [header, *patients]) + "\n",
        encoding="utf-8",
    )
    return path


@pytest.fixture
def header(schema):
    return schema.model_dump(mode="json")


@pytest.fixture
def patient():
    return {
        "id": "p1",
        "s": [0.4],
        "tau": [0.0, 1.0, 2.5],
        "x": [[1.0, None, 2.0, 1], [None, None, None, None], [0.5, 0.2, 0.1, 2]],
        "y": [[1, 3], [None, None], [0, None]],
    }


def test_parse_masks_follow_nulls(tmp_path, header, patient):
    """Test null cells become unobserved and stored as NaN"""
    cohort = parse_cohort(write_lines(tmp_path / "c.jsonl", header, [patient]))

    record = cohort.by_id("p1")
    assert record.T == 3
    assert record.mask_x.tolist()[0] == [True, False, True, True]
    assert not record.mask_x[1].any()
    assert np.isnan(record.x[1, 0])
    assert record.mask_y.tolist() == [[True, True], [False, False], [True, False]]
    assert cohort.schema.D == 4
    assert cohort.schema.P == 2


def test_serialize_then_parse_keeps_every_field(tmp_path, cohort):
    """Test a written cohort parses back with identical values, masks and meta"""
    cohort.meta["bundles"] = {p.id: i % 2 for i, p in enumerate(cohort)}
    path = serialize_cohort(cohort, tmp_path / "out" / "cohort.jsonl")

    parsed = parse_cohort(path)

    assert parsed.ids == cohort.ids
    assert parsed.meta == cohort.meta
    assert parsed.schema.is_compatible(cohort.schema)
    for original, copy in zip(cohort, parsed, strict=True):
        np.testing.assert_array_equal(copy.mask_x, original.mask_x)
        np.testing.assert_array_equal(copy.mask_y, original.mask_y)
        np.testing.assert_array_equal(copy.x[copy.mask_x], original.x[original.mask_x])
        np.testing.assert_array_equal(copy.y[copy.mask_y], original.y[original.mask_y])
        np.testing.assert_array_equal(copy.times, original.times)
        np.testing.assert_array_equal(copy.static, original.static)
    assert not (tmp_path / "out" / "cohort.jsonl.tmp").exists()


def test_non_increasing_times(tmp_path, header, patient):
    patient["tau"] = [0.0, 2.0, 2.0]
    with pytest.raises(CohortParseError, match="non-increasing times") as info:
        parse_cohort(write_lines(tmp_path / "c.jsonl", header, [patient]))
    assert info.value.patient_id == "p1"
    assert info.value.row == 2


def test_class_index_out_of_range(tmp_path, header, patient):
    """Test a categorical value outside 0..K-1 is rejected with its location"""
    patient["x"][2][3] = 3
    with pytest.raises(CohortParseError, match="out of range for 'd'") as info:
        parse_cohort(write_lines(tmp_path / "c.jsonl", header, [patient]))
    assert info.value.row == 2


def test_wrong_row_width(tmp_path, header, patient):
    patient["x"][0] = [1.0, 2.0]
    with pytest.raises(CohortParseError, match="schema expects 4"):
        parse_cohort(write_lines(tmp_path / "c.jsonl", header, [patient]))


def test_row_count_must_match_visits(tmp_path, header, patient):
    patient["y"] = patient["y"][:2]
    with pytest.raises(CohortParseError, match="2 rows for 3 visits"):
        parse_cohort(write_lines(tmp_path / "c.jsonl", header, [patient]))


def test_duplicate_patient_id(tmp_path, header, patient):
    with pytest.raises(CohortParseError, match="duplicate patient id"):
        parse_cohort(write_lines(tmp_path / "c.jsonl", header, [patient, patient]))


def test_unknown_patient_key(tmp_path, header, patient):
    patient["extra"] = 1
    with pytest.raises(CohortParseError, match="schema mismatch on line 2"):
        parse_cohort(write_lines(tmp_path / "c.jsonl", header, [patient]))


def test_bad_header(tmp_path, header, patient):
    header["D"] = 7
    with pytest.raises(CohortParseError, match="schema mismatch in header"):
        parse_cohort(write_lines(tmp_path / "c.jsonl", header, [patient]))


def test_static_count(tmp_path, header, patient):
    patient["s"] = []
    with pytest.raises(CohortParseError, match="expected 1 static values"):
        parse_cohort(write_lines(tmp_path / "c.jsonl", header, [patient]))


def test_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    with pytest.raises(CohortParseError, match="is empty"):
        parse_cohort(path)


def test_cohort_lookup(cohort):
    assert isinstance(cohort, Cohort)
    assert cohort.by_id(cohort.ids[2]) is cohort[2]
    with pytest.raises(KeyError):
        cohort.by_id("nobody")


def test_visit_times_start_at_zero(tmp_path, header, patient):
    """Test calendar-style times are shifted so the first visit sits at 0"""
    later = dict(patient, id="p2", tau=[12.0, 13.0, 14.5])
    cohort = parse_cohort(write_lines(tmp_path / "c.jsonl", header, [patient, later]))

    np.testing.assert_array_equal(cohort.by_id("p2").times, [0.0, 1.0, 2.5])
    np.testing.assert_array_equal(cohort.by_id("p1").times, [0.0, 1.0, 2.5])
