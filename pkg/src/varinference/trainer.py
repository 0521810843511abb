from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from loguru import logger

from src.cohortdata.records import Cohort
from src.cohortdata.transforms import standardize
from src.diffkernel.exceptions import NonFiniteError
from src.diffkernel.optim import AdamState, adam_step
from src.genmodel.config import ModelConfig
from src.genmodel.model import TrainedModel, build_model
from src.genmodel.params import copy_parameters
from src.utils.seeding import derive_seed

from .exceptions import EmptyCohortError, TrainingDivergedError, TrainingError
from .objective import LossBreakdown, TrainConfig, cohort_objective


@dataclass
class EpochRecord:
    epoch: int
    train: LossBreakdown
    val: LossBreakdown
    improved: bool


@dataclass
class TrainResult:
    model: TrainedModel
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False


def history_frame(history: list[EpochRecord]) -> pd.DataFrame:
    rows = []
    for record in history:
        row: dict = {"epoch": record.epoch}
        row.update({f"train_{k}": v for k, v in record.train.as_row().items()})
        row.update({f"val_{k}": v for k, v in record.val.as_row().items()})
        row["improved"] = int(record.improved)
        rows.append(row)
    return pd.DataFrame(rows)


def _check_finite(
    breakdown: LossBreakdown, epoch: int, last_good: TrainedModel
) -> None:
    if not np.isfinite(breakdown.total):
        raise TrainingDivergedError(
            f"loss became non-finite in epoch {epoch}", last_good, {"epoch": epoch}
        )


def train(
    train_cohort: Cohort,
    val_cohort: Cohort,
    model_config: ModelConfig,
    train_config: TrainConfig,
    seed: int = 0,
    threads: int = 1,
    init: TrainedModel | None = None,
) -> TrainResult:
    """Minibatch Adam with early stopping on the full validation objective.

    Cohorts are given in raw units; they are standardized with the training cohort's
    statistics (or the warm-start model's). Returns the best-validation parameters.
    """
    if len(train_cohort) == 0 or len(val_cohort) == 0:
        raise EmptyCohortError(
            "training and validation cohorts must both be nonempty",
            {"train": len(train_cohort), "val": len(val_cohort)},
        )
    if not train_cohort.schema.is_compatible(val_cohort.schema):
        raise TrainingError("training and validation cohorts use different schemas")
    seed = train_config.seed if train_config.seed is not None else seed

    if init is not None:
        if not init.schema.is_compatible(train_cohort.schema):
            raise TrainingError("warm-start checkpoint was trained on another schema")
        train_std, _ = standardize(train_cohort, init.scaler)
        model = init.with_params(copy_parameters(init.params))
        logger.info("Warm-starting from checkpoint parameters")
    else:
        train_std, scaler = standardize(train_cohort)
        model = build_model(
            model_config, train_cohort.schema, scaler, derive_seed(seed, "init")
        )
    val_std, _ = standardize(val_cohort, model.scaler)
    config, schema = model.config, model.schema
    train_inputs = [model.tensors(p) for p in train_std]
    val_inputs = [model.tensors(p) for p in val_std]

    def validate(params: dict) -> LossBreakdown:
        return cohort_objective(
            params,
            config,
            schema,
            val_inputs,
            train_config,
            derive_seed(seed, "validation"),
            strategy="all",
            with_grad=False,
            dropout=False,
            threads=threads,
        ).breakdown

    params = model.params
    state = AdamState.for_parameters(params, lr=train_config.learning_rate)
    initial_train = cohort_objective(
        params,
        config,
        schema,
        train_inputs,
        train_config,
        derive_seed(seed, "train", 0),
        with_grad=False,
        threads=threads,
    ).breakdown
    best_val = validate(params)
    best_params = copy_parameters(params)
    history = [EpochRecord(epoch=0, train=initial_train, val=best_val, improved=True)]
    logger.info(
        f"Epoch 0: train {initial_train.total:.4f}, validation {best_val.total:.4f}"
    )

    def last_good() -> TrainedModel:
        return model.with_params(best_params)

    best_epoch, stale, stopped_early = 0, 0, False
    n = len(train_inputs)
    for epoch in range(1, train_config.max_epochs + 1):
        epoch_seed = derive_seed(seed, "train", epoch)
        order = np.random.default_rng(derive_seed(seed, "batches", epoch)).permutation(n)
        epoch_train = LossBreakdown()
        for start in range(0, n, train_config.batch_size):
            batch = order[start : start + train_config.batch_size]
            try:
                result = cohort_objective(
                    params,
                    config,
                    schema,
                    [train_inputs[i] for i in batch],
                    train_config,
                    epoch_seed,
                    indices=batch,
                    threads=threads,
                )
                _check_finite(result.breakdown, epoch, last_good())
                params, state = adam_step(state, params, result.grads)
            except NonFiniteError as e:
                raise TrainingDivergedError(
                    f"training diverged in epoch {epoch}: {e}", last_good()
                ) from e
            epoch_train = epoch_train + result.breakdown

        try:
            val = validate(params)
        except NonFiniteError as e:
            raise TrainingDivergedError(
                f"validation diverged in epoch {epoch}: {e}", last_good()
            ) from e
        _check_finite(val, epoch, last_good())
        improved = val.total < best_val.total
        history.append(
            EpochRecord(epoch=epoch, train=epoch_train, val=val, improved=improved)
        )
        logger.info(
            f"Epoch {epoch}: train {epoch_train.total:.4f}, validation {val.total:.4f}"
            + (" (best)" if improved else "")
        )
        if improved:
            best_val, best_params = val, copy_parameters(params)
            best_epoch, stale = epoch, 0
            continue
        stale += 1
        if stale > train_config.patience:
            stopped_early = True
            logger.info(
                f"Stopping after epoch {epoch}: no improvement for {stale} epochs"
            )
            break

    trained = model.with_params(best_params)
    trained.metadata = {
        **model.metadata,
        "best_epoch": best_epoch,
        "epochs_run": history[-1].epoch,
        "best_val_total": best_val.total,
        "seed": seed,
    }
    return TrainResult(
        model=trained, history=history, best_epoch=best_epoch, stopped_early=stopped_early
    )
