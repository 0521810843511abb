from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .exceptions import CohortParseError
from .schema import FeatureSchema


@dataclass(frozen=True, eq=False)
class PatientRecord:
    """One patient's trajectory.

    `x` is T x D (continuous columns first), `y` is T x P. The boolean masks are
    authoritative: a cell with mask False is never read by any loss or metric, whatever
    value it holds (parsed files store NaN there).
    """

    id: str
    static: np.ndarray
    times: np.ndarray
    x: np.ndarray
    mask_x: np.ndarray
    y: np.ndarray
    mask_y: np.ndarray
    meds: np.ndarray | None = None
    factors: np.ndarray | None = None

    @property
    def T(self) -> int:  # noqa: N802
        return int(self.times.shape[0])

    def with_values(self, **changes: Any) -> PatientRecord:
        return replace(self, **changes)

    def validate(self, schema: FeatureSchema) -> None:
        """Check shape, time and class-range invariants against a schema."""
        pid = self.id
        T = self.T
        if T < 1:
            raise CohortParseError("patient has no visits", patient_id=pid)
        if self.static.shape != (schema.S,):
            raise CohortParseError(
                f"expected {schema.S} static values, got {self.static.shape[0]}",
                patient_id=pid,
            )
        if not np.all(np.isfinite(self.static)):
            raise CohortParseError("static values must be finite", patient_id=pid)
        if not np.all(np.isfinite(self.times)):
            raise CohortParseError("visit times must be finite", patient_id=pid)
        for row in range(1, T):
            if self.times[row] <= self.times[row - 1]:
                raise CohortParseError("non-increasing times", patient_id=pid, row=row)
        for name, values, mask, width in (
            ("x", self.x, self.mask_x, schema.D),
            ("y", self.y, self.mask_y, schema.P),
        ):
            if values.shape != (T, width) or mask.shape != (T, width):
                raise CohortParseError(
                    f"{name} must be {T}x{width}, got {values.shape}", patient_id=pid
                )
            bad_rows = np.nonzero(np.any(mask & ~np.isfinite(values), axis=1))[0]
            if bad_rows.size:
                raise CohortParseError(
                    f"observed {name} cell is not finite",
                    patient_id=pid,
                    row=int(bad_rows[0]),
                )
        for j, feature in enumerate(schema.categorical_features):
            column = schema.n_continuous + j
            self._check_classes(
                self.x[:, column], self.mask_x[:, column], feature.num_classes, feature.name
            )
        for j, concept in enumerate(schema.concepts):
            self._check_classes(
                self.y[:, j], self.mask_y[:, j], concept.num_classes, concept.name
            )

    def _check_classes(
        self, values: np.ndarray, mask: np.ndarray, num_classes: int, name: str
    ) -> None:
        for row in np.nonzero(mask)[0]:
            value = values[row]
            if value != np.floor(value) or not 0 <= value < num_classes:
                raise CohortParseError(
                    f"class index {value:g} out of range for '{name}' "
                    f"({num_classes} classes)",
                    patient_id=self.id,
                    row=int(row),
                )


@dataclass
class Cohort:
    """An immutable-by-convention list of records sharing one schema."""

    patients: list[PatientRecord]
    schema: FeatureSchema
    meta: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.patients)

    def __iter__(self) -> Iterator[PatientRecord]:
        return iter(self.patients)

    def __getitem__(self, index: int) -> PatientRecord:
        return self.patients[index]

    @property
    def ids(self) -> list[str]:
        return [p.id for p in self.patients]

    def by_id(self, patient_id: str) -> PatientRecord:
        for patient in self.patients:
            if patient.id == patient_id:
                return patient
        raise KeyError(f"Unknown patient '{patient_id}'")

    def with_patients(self, patients: list[PatientRecord]) -> Cohort:
        return Cohort(patients=patients, schema=self.schema, meta=dict(self.meta))
