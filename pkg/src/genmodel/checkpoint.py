"""
Checkpoint container: one JSON document holding the model configuration, the feature
schema, the scaler statistics and every parameter array (shape + row-major data).
JSON floats round-trip float64 exactly, so save -> load reproduces the parameters bit
for bit.
"""

from pathlib import Path
from typing import Any, Literal

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.cohortdata.schema import FeatureSchema
from src.cohortdata.transforms import ScalerStats
from src.utils.io import atomic_write_text

from .config import ModelConfig
from .exceptions import CheckpointError, ModelError
from .model import TrainedModel

CHECKPOINT_VERSION = 1


class ParameterArray(BaseModel):
    model_config = ConfigDict(extra="forbid")

    shape: list[int]
    data: list[float]


class CheckpointFile(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    version: Literal[1] = CHECKPOINT_VERSION
    model: ModelConfig
    feature_schema: FeatureSchema = Field(alias="schema")
    scaler: ScalerStats
    params: dict[str, ParameterArray]
    metadata: dict[str, Any] = {}


def save_checkpoint(model: TrainedModel, path: str | Path) -> Path:
    document = CheckpointFile(
        model=model.config,
        feature_schema=model.schema,
        scaler=model.scaler,
        params={
            name: ParameterArray(
                shape=list(value.shape), data=value.reshape(-1).tolist()
            )
            for name, value in sorted(model.params.items())
        },
        metadata=model.metadata,
    )
    written = atomic_write_text(path, document.model_dump_json(by_alias=True))
    logger.info(f"Saved checkpoint with {len(model.params)} parameter arrays to {written}")
    return written


def load_checkpoint(path: str | Path) -> TrainedModel:
    """Read a checkpoint and validate config, schema and parameter shapes together."""
    path = Path(path)
    try:
        document = CheckpointFile.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e
    except ValidationError as e:
        raise CheckpointError(f"Malformed checkpoint {path}: {e}") from e

    schema = document.feature_schema
    try:
        config = document.model.resolve(schema)
    except ModelError as e:
        raise CheckpointError(
            f"Checkpoint {path}: model configuration does not fit its schema: {e.message}"
        ) from e
    if len(document.scaler.mean) != schema.n_continuous:
        raise CheckpointError(f"Checkpoint {path}: scaler does not match the schema")

    params = {}
    for name, array in document.params.items():
        if int(np.prod(array.shape)) != len(array.data):
            raise CheckpointError(f"Checkpoint {path}: parameter '{name}' is truncated")
        params[name] = np.asarray(array.data, dtype=np.float64).reshape(array.shape)

    model = TrainedModel(
        config=config,
        schema=schema,
        scaler=document.scaler,
        params=params,
        metadata=document.metadata,
    )
    model.check()
    logger.info(f"Loaded checkpoint {path}")
    return model
