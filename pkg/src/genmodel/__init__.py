from .checkpoint import load_checkpoint, save_checkpoint
from .config import GuidanceGroup, GuidancePartition, ModelConfig, load_ssc_default
from .exceptions import CheckpointError, ModelError, PartitionError
from .inputs import PatientTensors, patient_tensors
from .model import TrainedModel, build_model
from .networks import (
    GaussianParams,
    LikelihoodParams,
    decode,
    encode,
    guide,
    guide_logits,
    prior_params,
    reparameterize,
)
from .params import ModelParameters, init_parameters, parameter_groups

__all__ = [
    "CheckpointError",
    "GaussianParams",
    "GuidanceGroup",
    "GuidancePartition",
    "LikelihoodParams",
    "ModelConfig",
    "ModelError",
    "ModelParameters",
    "PartitionError",
    "PatientTensors",
    "TrainedModel",
    "build_model",
    "decode",
    "encode",
    "guide",
    "guide_logits",
    "init_parameters",
    "load_checkpoint",
    "load_ssc_default",
    "parameter_groups",
    "patient_tensors",
    "prior_params",
    "reparameterize",
    "save_checkpoint",
]
