"""Naive forecasters used as references for the model's forecasts."""

import numpy as np

from src.cohortdata.records import PatientRecord
from src.cohortdata.schema import FeatureSchema
from src.cohortdata.transforms import CohortStats

SD_FLOOR = 1e-8


def _carry_forward(
    values: np.ndarray, mask: np.ndarray, k: int, fallback: np.ndarray
) -> np.ndarray:
    """Rows >= k hold the last observed value among rows < k, per column; rows < k are NaN."""
    T, width = values.shape
    out = np.full((T, width), np.nan)
    for column in range(width):
        seen = np.nonzero(mask[:k, column])[0]
        value = values[seen[-1], column] if seen.size else fallback[column]
        out[k:, column] = value
    return out


def baseline_last_value(
    record: PatientRecord, k: int, stats: CohortStats
) -> np.ndarray:
    """T x D measurement forecasts for visits k..T-1 from the first k visits.

    A feature never observed before k falls back to the training median (continuous)
    or mode (categorical).
    """
    fallback = np.concatenate([stats.cont_median, stats.cat_modes()]).astype(float)
    return _carry_forward(record.x, record.mask_x, k, fallback)


def baseline_last_label(
    record: PatientRecord, k: int, stats: CohortStats
) -> np.ndarray:
    """Last observed concept label carried forward; training mode as fallback."""
    fallback = np.asarray(stats.concept_modes(), dtype=float)
    return _carry_forward(record.y, record.mask_y, k, fallback)


def baseline_cohort(
    stats: CohortStats, schema: FeatureSchema, feature: str, rng: np.random.Generator
) -> float:
    """One draw from the training distribution of a measurement feature."""
    column = schema.feature_index(feature)
    C = schema.n_continuous
    if column < C:
        sd = max(stats.cont_sd[column], SD_FLOOR)
        return float(rng.normal(stats.cont_mean[column], sd))
    frequencies = stats.cat_frequencies[column - C]
    return float(rng.choice(len(frequencies), p=frequencies))


def cohort_point_forecast(stats: CohortStats, T: int) -> np.ndarray:  # noqa: N803
    """T x D point forecasts: training mean (continuous) and mode (categorical)."""
    row = np.concatenate([stats.cont_mean, stats.cat_modes()]).astype(float)
    return np.tile(row, (T, 1))


def cohort_label_draws(
    stats: CohortStats, T: int, rng: np.random.Generator  # noqa: N803
) -> np.ndarray:
    """T x P concept labels drawn from the training class frequencies."""
    columns = [
        rng.choice(len(frequencies), size=T, p=frequencies)
        for frequencies in stats.concept_frequencies
    ]
    if not columns:
        return np.zeros((T, 0))
    return np.stack(columns, axis=1).astype(float)
