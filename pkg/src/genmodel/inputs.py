from dataclasses import dataclass

import numpy as np

from src.cohortdata.records import PatientRecord
from src.cohortdata.schema import FeatureSchema

from .config import ModelConfig


@dataclass(frozen=True)
class PatientTensors:
    """Numeric views of one standardized record, with every masked cell zero-filled.

    Nothing here reads a value behind a False mask, so the networks and the losses are
    invariant to whatever a masked cell holds.
    """

    id: str
    times: np.ndarray
    static: np.ndarray
    context: np.ndarray  # T x (1 + S): tau / time_scale, s
    encoder_inputs: np.ndarray  # T x encoder_input_dim
    cont_values: np.ndarray  # T x C
    cont_mask: np.ndarray  # T x C, float
    cat_index: np.ndarray  # T x n_categorical, int
    cat_mask: np.ndarray  # T x n_categorical, float
    y_index: np.ndarray  # T x P, int
    y_mask: np.ndarray  # T x P, float
    time_scale: float

    @property
    def T(self) -> int:  # noqa: N802
        return int(self.times.shape[0])

    def targets(self, k: int) -> np.ndarray:
        """Per-visit (tau_t - tau_k, tau_t, s) fed to the posterior heads."""
        reference = self.times[k - 1] if k > 0 else 0.0
        scaled = self.times / self.time_scale
        return np.column_stack(
            [
                (self.times - reference) / self.time_scale,
                scaled,
                np.tile(self.static, (self.T, 1)),
            ]
        )


def _class_indices(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.where(mask, values, 0.0).astype(np.int64)


def patient_tensors(
    record: PatientRecord, schema: FeatureSchema, config: ModelConfig
) -> PatientTensors:
    C = schema.n_continuous
    T = record.T
    scale = config.time_scale

    cont_mask = record.mask_x[:, :C]
    cont_values = np.where(cont_mask, record.x[:, :C], 0.0)
    cat_mask = record.mask_x[:, C:]
    cat_index = _class_indices(record.x[:, C:], cat_mask)

    one_hot = []
    for j, feature in enumerate(schema.categorical_features):
        block = np.zeros((T, feature.num_classes))
        rows = np.nonzero(cat_mask[:, j])[0]
        block[rows, cat_index[rows, j]] = 1.0
        one_hot.append(block)

    gaps = np.diff(record.times, prepend=record.times[0])
    context = np.column_stack([record.times / scale, np.tile(record.static, (T, 1))])
    encoder_inputs = np.column_stack(
        [
            cont_values,
            *one_hot,
            record.mask_x.astype(float),
            gaps / scale,
            context,
        ]
    )
    return PatientTensors(
        id=record.id,
        times=record.times.astype(float),
        static=record.static.astype(float),
        context=context,
        encoder_inputs=encoder_inputs,
        cont_values=cont_values,
        cont_mask=cont_mask.astype(float),
        cat_index=cat_index,
        cat_mask=cat_mask.astype(float),
        y_index=_class_indices(record.y, record.mask_y),
        y_mask=record.mask_y.astype(float),
        time_scale=scale,
    )
