"""
Cohort files: line-delimited JSON.

Line 1 is the FeatureSchema object (optionally with a "meta" member carrying the config
hash and seed of the run that wrote it). Every following line is one patient:

    {"id": "p0001", "s": [...], "tau": [...], "x": [[...]], "y": [[...]], "p": [[...]]}

Missing cells are null. "p" (medications) and "f" (simulator factor paths) are optional.
"""

import json
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, ValidationError

from src.utils.io import atomic_write_text

from .exceptions import CohortParseError
from .records import Cohort, PatientRecord
from .schema import FeatureSchema

Cell = float | None


class PatientLine(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    s: list[float] = []
    tau: list[float]
    x: list[list[Cell]]
    y: list[list[Cell]] = []
    p: list[list[Cell]] | None = None
    f: list[list[float]] | None = None


def _masked_matrix(
    rows: list[list[Cell]], T: int, width: int, name: str, pid: str
) -> tuple[np.ndarray, np.ndarray]:
    if width == 0 and not rows:
        return np.zeros((T, 0)), np.zeros((T, 0), dtype=bool)
    if len(rows) != T:
        raise CohortParseError(f"'{name}' has {len(rows)} rows for {T} visits", pid)
    values = np.full((T, width), np.nan)
    for row, cells in enumerate(rows):
        if len(cells) != width:
            raise CohortParseError(
                f"'{name}' row has {len(cells)} cells, schema expects {width}", pid, row
            )
        for col, cell in enumerate(cells):
            if cell is not None:
                values[row, col] = cell
    return values, ~np.isnan(values)


def record_from_line(line: PatientLine, schema: FeatureSchema) -> PatientRecord:
    """Build and validate one record; visit times are shifted to start at 0."""
    T = len(line.tau)
    times = np.asarray(line.tau, dtype=float)
    if T and times[0] != 0.0:
        logger.debug(f"Patient {line.id}: shifting visit times by {-times[0]:g}")
        times = times - times[0]
    x, mask_x = _masked_matrix(line.x, T, schema.D, "x", line.id)
    y, mask_y = _masked_matrix(line.y, T, schema.P, "y", line.id)
    meds = None
    if line.p is not None:
        meds, _ = _masked_matrix(line.p, T, len(schema.medications), "p", line.id)
    record = PatientRecord(
        id=line.id,
        static=np.asarray(line.s, dtype=float),
        times=times,
        x=x,
        mask_x=mask_x,
        y=y,
        mask_y=mask_y,
        meds=meds,
        factors=None if line.f is None else np.asarray(line.f, dtype=float),
    )
    record.validate(schema)
    return record


def parse_cohort(path: str | Path) -> Cohort:
    """Read and validate a cohort file."""
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        lines = [line for line in f.read().splitlines() if line.strip()]
    if not lines:
        raise CohortParseError(f"Cohort file {path} is empty")

    try:
        header = json.loads(lines[0])
        meta = header.pop("meta", {}) if isinstance(header, dict) else {}
        schema = FeatureSchema.model_validate(header)
    except (json.JSONDecodeError, ValidationError) as e:
        raise CohortParseError(f"schema mismatch in header of {path}: {e}") from e

    patients: list[PatientRecord] = []
    seen: set[str] = set()
    for line_number, raw in enumerate(lines[1:], start=2):
        try:
            line = PatientLine.model_validate_json(raw)
        except ValidationError as e:
            raise CohortParseError(
                f"schema mismatch on line {line_number} of {path}: {e}"
            ) from e
        if line.id in seen:
            raise CohortParseError("duplicate patient id", patient_id=line.id)
        seen.add(line.id)
        patients.append(record_from_line(line, schema))

    logger.info(f"Parsed {len(patients)} patients from {path}")
    return Cohort(patients=patients, schema=schema, meta=meta)


def _cells(values: np.ndarray, mask: np.ndarray, integer_columns: set[int]) -> list:
    rows = []
    for row_values, row_mask in zip(values, mask, strict=True):
        cells: list[Any] = []
        for col, (value, observed) in enumerate(zip(row_values, row_mask, strict=True)):
            if not observed:
                cells.append(None)
            elif col in integer_columns:
                cells.append(int(value))
            else:
                cells.append(float(value))
        rows.append(cells)
    return rows


def record_to_dict(record: PatientRecord, schema: FeatureSchema) -> dict[str, Any]:
    categorical_columns = set(range(schema.n_continuous, schema.D))
    out: dict[str, Any] = {
        "id": record.id,
        "s": [float(v) for v in record.static],
        "tau": [float(v) for v in record.times],
        "x": _cells(record.x, record.mask_x, categorical_columns),
        "y": _cells(record.y, record.mask_y, set(range(schema.P))),
    }
    if record.meds is not None:
        out["p"] = _cells(record.meds, ~np.isnan(record.meds), set())
    if record.factors is not None:
        out["f"] = [[float(v) for v in row] for row in record.factors]
    return out


def serialize_cohort(cohort: Cohort, path: str | Path) -> Path:
    """Write a cohort file atomically; parse(serialize(c)) reproduces every field."""
    header = cohort.schema.model_dump(mode="json")
    if cohort.meta:
        header["meta"] = cohort.meta
    lines = [json.dumps(header, allow_nan=False)]
    for record in cohort.patients:
        lines.append(
            json.dumps(record_to_dict(record, cohort.schema), allow_nan=False)
        )
    written = atomic_write_text(path, "\n".join(lines) + "\n")
    logger.info(f"Wrote {len(cohort)} patients to {written}")
    return written

