"""
Forecast evaluation over a cohort.

Each patient is conditioned on its first k visits (k from `EvalConfig.k`) and scored on
visits k..T-1 only: CI coverage of continuous cells, RMSE against the last-value and
cohort baselines, macro F1 of concept forecasts against the same baselines, and a pooled
20-bin calibration curve of the concept class probabilities.
"""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, PositiveInt

from src.cohortdata.records import Cohort
from src.cohortdata.transforms import CohortStats
from src.genmodel.model import TrainedModel
from src.utils.parallel import ordered_map
from src.utils.seeding import derive_seed, patient_rng

from .baselines import (
    baseline_last_label,
    baseline_last_value,
    cohort_label_draws,
    cohort_point_forecast,
)
from .exceptions import ForecastError, MetricError
from .metrics import (
    N_BINS,
    CalibrationCurve,
    calibration_curve,
    coverage,
    forecast_mask,
    macro_f1,
    one_hot_pairs,
    rmse,
)
from .predictive import PredictiveSamples, predict, resolve_k


class EvalConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mc_samples: PositiveInt = 50
    predictive_draws: PositiveInt = 5
    k: float = Field(default=0.5, ge=0.0)
    n_bins: PositiveInt = N_BINS
    min_bin_count: int = Field(default=50, ge=1)
    quantile_ci: bool = False
    per_concept_calibration: bool = False
    calibrate_categorical_x: bool = False
    seed: int | None = None


@dataclass
class PatientForecast:
    """Forecast-horizon arrays of one patient, all T x width."""

    samples: PredictiveSamples
    cont_truth: np.ndarray
    cont_mask: np.ndarray
    cont_last: np.ndarray
    cat_truth: np.ndarray
    cat_mask: np.ndarray
    y_truth: np.ndarray
    y_mask: np.ndarray
    y_last: np.ndarray
    y_cohort: np.ndarray


@dataclass
class EvaluationReport:
    metrics: pd.DataFrame
    calibration: pd.DataFrame
    curves: dict[str, CalibrationCurve] = field(default_factory=dict)
    n_patients: int = 0

    def metric(self, name: str, target: str, method: str = "model") -> float:
        rows = self.metrics[
            (self.metrics["metric"] == name)
            & (self.metrics["target"] == target)
            & (self.metrics["method"] == method)
        ]
        if rows.empty:
            raise KeyError(f"no {name}/{target}/{method} in report")
        return float(rows["value"].iloc[0])


def _patient_forecast(
    model: TrainedModel,
    record,
    index: int,
    config: EvalConfig,
    stats: CohortStats,
    stage_seed: int,
) -> PatientForecast | None:
    k = resolve_k(config.k, record.T)
    if k >= record.T:
        return None
    rng = patient_rng(stage_seed, index)
    samples = predict(
        model,
        record,
        k,
        config.mc_samples,
        config.predictive_draws,
        rng,
        quantile_ci=config.quantile_ci,
    )
    C = model.schema.n_continuous
    last = baseline_last_value(record, k, stats)
    return PatientForecast(
        samples=samples,
        cont_truth=record.x[:, :C],
        cont_mask=forecast_mask(record.mask_x[:, :C], k),
        cont_last=last[:, :C],
        cat_truth=record.x[:, C:],
        cat_mask=forecast_mask(record.mask_x[:, C:], k),
        y_truth=record.y,
        y_mask=forecast_mask(record.mask_y, k),
        y_last=baseline_last_label(record, k, stats),
        y_cohort=cohort_label_draws(stats, record.T, rng),
    )


def _stack(forecasts: list[PatientForecast], attribute: str) -> np.ndarray:
    return np.concatenate([getattr(f, attribute) for f in forecasts], axis=0)


def _calibration_frame(curves: dict[str, CalibrationCurve]) -> pd.DataFrame:
    rows = []
    for scope, curve in curves.items():
        for b in range(len(curve.bin_counts)):
            rows.append(
                {
                    "scope": scope,
                    "bin": b,
                    "lower": curve.bin_edges[b],
                    "upper": curve.bin_edges[b + 1],
                    "mean_predicted": curve.mean_predicted[b],
                    "fraction_positive": curve.fraction_positive[b],
                    "count": int(curve.bin_counts[b]),
                    "empty": int(curve.empty[b]),
                }
            )
    return pd.DataFrame(rows)


def evaluate(
    model: TrainedModel,
    cohort: Cohort,
    config: EvalConfig,
    stats: CohortStats,
    seed: int = 0,
    threads: int = 1,
) -> EvaluationReport:
    """Score forecasts of a raw-unit cohort against truth and both baselines."""
    if not model.schema.is_compatible(cohort.schema):
        raise ForecastError("cohort schema does not match the model")
    seed = config.seed if config.seed is not None else seed
    stage_seed = derive_seed(seed, "evaluate")
    schema = model.schema

    forecasts = [
        f
        for f in ordered_map(
            lambda item: _patient_forecast(model, item[1], item[0], config, stats, stage_seed),
            list(enumerate(cohort.patients)),
            threads,
        )
        if f is not None
    ]
    if not forecasts:
        raise MetricError("no patient has visits beyond its conditioning length")
    logger.info(f"Forecast {len(forecasts)} of {len(cohort)} patients")

    rows: list[dict] = []

    def add(metric: str, target: str, method: str, value: float) -> None:
        rows.append({"metric": metric, "target": target, "method": method, "value": value})

    C = schema.n_continuous
    if C:
        truth = _stack(forecasts, "cont_truth")
        mask = _stack(forecasts, "cont_mask")
        lower = np.concatenate([f.samples.cont_lower for f in forecasts])
        upper = np.concatenate([f.samples.cont_upper for f in forecasts])
        mean = np.concatenate([f.samples.cont_mean for f in forecasts])
        last = _stack(forecasts, "cont_last")
        pooled = cohort_point_forecast(stats, truth.shape[0])[:, :C]
        sd = np.asarray(stats.cont_sd)
        if mask.any():
            add("coverage", "all_continuous", "model", coverage(lower, upper, truth, mask))
            for method, predicted in (("model", mean), ("last_value", last), ("cohort", pooled)):
                add("rmse", "all_continuous", method, rmse(predicted / sd, truth / sd, mask))
        for column, name in enumerate(schema.feature_names[:C]):
            column_mask = mask[:, column]
            if not column_mask.any():
                continue
            add(
                "coverage",
                name,
                "model",
                coverage(lower[:, column], upper[:, column], truth[:, column], column_mask),
            )
            for method, predicted in (("model", mean), ("last_value", last), ("cohort", pooled)):
                add("rmse", name, method, rmse(predicted[:, column], truth[:, column], column_mask))

    curves: dict[str, CalibrationCurve] = {}
    pooled_probs: list[np.ndarray] = []
    pooled_truth: list[np.ndarray] = []
    y_truth = _stack(forecasts, "y_truth")
    y_mask = _stack(forecasts, "y_mask")
    y_last = _stack(forecasts, "y_last")
    y_cohort = _stack(forecasts, "y_cohort")
    f1_scores: dict[str, list[float]] = {"model": [], "last_value": [], "cohort": []}
    for j, concept in enumerate(schema.concepts):
        probs = [f.samples.y_probs[j] for f in forecasts]
        concept_mask = y_mask[:, j]
        if probs[0] is None or not concept_mask.any():
            continue
        probs = np.concatenate(probs)
        predictions = {
            "model": probs.argmax(axis=1),
            "last_value": y_last[:, j],
            "cohort": y_cohort[:, j],
        }
        for method, predicted in predictions.items():
            score = macro_f1(predicted, y_truth[:, j], concept_mask)
            f1_scores[method].append(score)
            add("macro_f1", concept.name, method, score)
        p, t = one_hot_pairs(probs, y_truth[:, j], concept_mask)
        pooled_probs.append(p)
        pooled_truth.append(t)
        if config.per_concept_calibration:
            curves[concept.name] = calibration_curve(p, t, n_bins=config.n_bins)

    for method, scores in f1_scores.items():
        if scores:
            add("macro_f1", "mean", method, float(np.mean(scores)))

    if config.calibrate_categorical_x:
        cat_truth = _stack(forecasts, "cat_truth")
        cat_mask = _stack(forecasts, "cat_mask")
        for j in range(schema.n_categorical):
            if not cat_mask[:, j].any():
                continue
            probs = np.concatenate([f.samples.cat_probs[j] for f in forecasts])
            p, t = one_hot_pairs(probs, cat_truth[:, j], cat_mask[:, j])
            pooled_probs.append(p)
            pooled_truth.append(t)

    if pooled_probs:
        curve = calibration_curve(
            np.concatenate(pooled_probs),
            np.concatenate(pooled_truth),
            n_bins=config.n_bins,
        )
        curves = {"pooled": curve, **curves}
        try:
            add("calibration_max_gap", "pooled", "model", curve.max_gap(config.min_bin_count))
        except MetricError:
            logger.warning(
                f"No calibration bin reaches {config.min_bin_count} samples; gap not reported"
            )

    return EvaluationReport(
        metrics=pd.DataFrame(rows, columns=["metric", "target", "method", "value"]),
        calibration=_calibration_frame(curves),
        curves=curves,
        n_patients=len(forecasts),
    )
