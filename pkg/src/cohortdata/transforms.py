import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict

from .exceptions import SplitError
from .records import Cohort, PatientRecord

STD_FLOOR = 1e-8


class ScalerStats(BaseModel):
    """Per-continuous-feature mean and population standard deviation.

    Computed over observed cells only; constant or unobserved features get std=1.
    """

    model_config = ConfigDict(extra="forbid")

    mean: list[float]
    std: list[float]

    @property
    def mean_array(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=float)

    @property
    def std_array(self) -> np.ndarray:
        return np.asarray(self.std, dtype=float)

    @classmethod
    def fit(cls, cohort: Cohort) -> "ScalerStats":
        C = cohort.schema.n_continuous
        means, stds = [], []
        for column in range(C):
            values = np.concatenate(
                [p.x[p.mask_x[:, column], column] for p in cohort.patients]
                or [np.zeros(0)]
            )
            if values.size == 0:
                means.append(0.0)
                stds.append(1.0)
                continue
            mean = float(values.mean())
            std = float(values.std())
            means.append(mean)
            stds.append(std if std >= STD_FLOOR else 1.0)
        return cls(mean=means, std=stds)

    def transform(self, values: np.ndarray) -> np.ndarray:
        """Standardize the continuous block (last axis = continuous features)."""
        return (values - self.mean_array) / self.std_array

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return values * self.std_array + self.mean_array


class CohortStats(BaseModel):
    """Training-cohort summaries used by the naive forecasters.

    Continuous features keep mean, population sd (floored like ScalerStats) and median;
    categorical features and concepts keep empirical class frequencies.
    """

    model_config = ConfigDict(extra="forbid")

    cont_mean: list[float]
    cont_sd: list[float]
    cont_median: list[float]
    cat_frequencies: list[list[float]]
    concept_frequencies: list[list[float]]

    @staticmethod
    def _frequencies(values: np.ndarray, num_classes: int) -> list[float]:
        counts = np.bincount(values.astype(np.int64), minlength=num_classes)[:num_classes]
        if counts.sum() == 0:
            return [1.0 / num_classes] * num_classes
        return (counts / counts.sum()).tolist()

    @classmethod
    def fit(cls, cohort: Cohort) -> "CohortStats":
        schema = cohort.schema
        scaler = ScalerStats.fit(cohort)
        medians = []
        for column in range(schema.n_continuous):
            values = [p.x[p.mask_x[:, column], column] for p in cohort.patients]
            values = np.concatenate(values or [np.zeros(0)])
            medians.append(float(np.median(values)) if values.size else 0.0)

        def observed(matrix: str, mask: str, column: int) -> np.ndarray:
            parts = [
                getattr(p, matrix)[getattr(p, mask)[:, column], column]
                for p in cohort.patients
            ]
            return np.concatenate(parts or [np.zeros(0)])

        cat = [
            cls._frequencies(
                observed("x", "mask_x", schema.n_continuous + j), feature.num_classes
            )
            for j, feature in enumerate(schema.categorical_features)
        ]
        concepts = [
            cls._frequencies(observed("y", "mask_y", j), concept.num_classes)
            for j, concept in enumerate(schema.concepts)
        ]
        return cls(
            cont_mean=scaler.mean,
            cont_sd=scaler.std,
            cont_median=medians,
            cat_frequencies=cat,
            concept_frequencies=concepts,
        )

    def cat_modes(self) -> list[int]:
        return [int(np.argmax(f)) for f in self.cat_frequencies]

    def concept_modes(self) -> list[int]:
        return [int(np.argmax(f)) for f in self.concept_frequencies]


def filter_min_visits(cohort: Cohort, min_T: int) -> Cohort:  # noqa: N803
    """Keep patients with at least `min_T` visits."""
    if min_T < 1:
        raise ValueError("min_T must be at least 1")
    kept = [p for p in cohort.patients if p.T >= min_T]
    logger.info(
        f"Visit filter (min {min_T}): kept {len(kept)} of {len(cohort)} patients"
    )
    return cohort.with_patients(kept)


def standardize_record(record: PatientRecord, stats: ScalerStats) -> PatientRecord:
    C = len(stats.mean)
    x = record.x.copy()
    observed = record.mask_x[:, :C]
    block = x[:, :C]
    x[:, :C] = np.where(observed, stats.transform(np.where(observed, block, 0.0)), block)
    return record.with_values(x=x)


def standardize(
    cohort: Cohort, stats: ScalerStats | None = None
) -> tuple[Cohort, ScalerStats]:
    """Map observed continuous cells to (v - mean) / std; categorical cells untouched.

    Statistics are fitted on this cohort when not given (pass the training cohort's
    statistics to transform validation and test cohorts).
    """
    if stats is None:
        stats = ScalerStats.fit(cohort)
    elif len(stats.mean) != cohort.schema.n_continuous:
        raise ValueError(
            f"scaler covers {len(stats.mean)} features, "
            f"schema has {cohort.schema.n_continuous} continuous features"
        )
    patients = [standardize_record(p, stats) for p in cohort.patients]
    return cohort.with_patients(patients), stats


def split(
    cohort: Cohort, fractions: tuple[float, float, float], seed: int
) -> tuple[Cohort, Cohort, Cohort]:
    """Partition patients (never visits) into train/val/test, deterministic in seed."""
    n = len(cohort)
    if n < 3:
        raise SplitError(f"cannot split a cohort of {n} patients into three parts")
    if len(fractions) != 3 or min(fractions) <= 0 or abs(sum(fractions) - 1.0) > 1e-9:
        raise SplitError(
            "split fractions must be three positive numbers summing to 1",
            {"fractions": fractions},
        )

    n_train = max(1, int(round(fractions[0] * n)))
    n_val = max(1, int(round(fractions[1] * n)))
    while n_train + n_val > n - 1:
        if n_train >= n_val:
            n_train -= 1
        else:
            n_val -= 1

    order = np.random.default_rng(seed).permutation(n)
    parts = (
        np.sort(order[:n_train]),
        np.sort(order[n_train : n_train + n_val]),
        np.sort(order[n_train + n_val :]),
    )
    train, val, test = (cohort.with_patients([cohort[i] for i in part]) for part in parts)
    logger.info(f"Split {n} patients into {len(train)}/{len(val)}/{len(test)}")
    return train, val, test
