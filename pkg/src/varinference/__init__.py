from .exceptions import EmptyCohortError, TrainingDivergedError, TrainingError
from .losses import kl_diag_gaussian, masked_categorical_ce, masked_gaussian_nll
from .objective import (
    KDraw,
    LossBreakdown,
    ObjectiveResult,
    TrainConfig,
    cohort_objective,
    elbo_loss,
    patient_loss,
    sample_k_draws,
)
from .trainer import EpochRecord, TrainResult, history_frame, train

__all__ = [
    "EmptyCohortError",
    "EpochRecord",
    "KDraw",
    "LossBreakdown",
    "ObjectiveResult",
    "TrainConfig",
    "TrainResult",
    "TrainingDivergedError",
    "TrainingError",
    "cohort_objective",
    "elbo_loss",
    "history_frame",
    "kl_diag_gaussian",
    "masked_categorical_ce",
    "masked_gaussian_nll",
    "patient_loss",
    "sample_k_draws",
    "train",
]
