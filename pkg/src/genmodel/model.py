from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from src.cohortdata.records import PatientRecord
from src.cohortdata.schema import FeatureSchema
from src.cohortdata.transforms import ScalerStats

from .config import ModelConfig
from .exceptions import ModelError
from .inputs import PatientTensors, patient_tensors
from .params import ModelParameters, check_parameters, init_parameters


@dataclass
class TrainedModel:
    """Everything needed to run the networks on a raw-unit cohort.

    `config` is resolved against `schema`; `scaler` maps raw continuous values to the
    standardized scale the networks were trained on.
    """

    config: ModelConfig
    schema: FeatureSchema
    scaler: ScalerStats
    params: ModelParameters
    metadata: dict[str, Any] = field(default_factory=dict)

    def tensors(self, record: PatientRecord) -> PatientTensors:
        """Inputs for an already standardized record."""
        return patient_tensors(record, self.schema, self.config)

    def with_params(self, params: ModelParameters) -> "TrainedModel":
        return replace(self, params=params)

    def check(self) -> None:
        check_parameters(self.params, self.config, self.schema)


def build_model(
    config: ModelConfig,
    schema: FeatureSchema,
    scaler: ScalerStats,
    seed: int,
    zero_output: bool = False,
) -> TrainedModel:
    """Resolve `config` against `schema` and draw initial weights."""
    resolved = config.resolve(schema)
    if len(scaler.mean) != schema.n_continuous:
        raise ModelError(
            f"scaler covers {len(scaler.mean)} features, schema has "
            f"{schema.n_continuous} continuous features"
        )
    params = init_parameters(
        resolved, schema, np.random.default_rng(seed), zero_output=zero_output
    )
    return TrainedModel(config=resolved, schema=schema, scaler=scaler, params=params)
