"""
Synthetic cohort simulator.

Each patient carries `n_factors` latent factor paths that evolve between visits as a
damped random walk,

    f(t + d) = a * f(t) + drift * d + N(0, d * q),

with a per-patient drift made of a base term, a static-covariate term and an optional
trajectory-bundle term. Continuous measurements are ``offset + loading . f`` plus
Gaussian noise; categorical measurements threshold the (noisy) factor score. Concepts
are labeled by the rule labeler on the noise-free measurements, then cells are masked
at random. The true factor paths are kept on each record.
"""

import math
from typing import Literal

import numpy as np
from loguru import logger
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveFloat,
    PositiveInt,
    model_validator,
)

from src.cohortdata.records import Cohort, PatientRecord
from src.cohortdata.schema import (
    CategoricalFeature,
    ContinuousFeature,
    FeatureSchema,
    StaticField,
)
from src.utils.seeding import derive_seed, patient_rng

from .rules import ConceptRuleSet, label_matrix

Probability = float


class SimFeature(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    kind: Literal["continuous", "categorical"] = "continuous"
    unit: str = ""
    offset: float = 0.0
    thresholds: list[float] = []
    levels: list[float] | None = None

    @model_validator(mode="after")
    def check_thresholds(self) -> "SimFeature":
        if self.kind == "categorical":
            if not self.thresholds:
                raise ValueError(f"categorical feature '{self.name}' needs thresholds")
            if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
                raise ValueError(f"thresholds of '{self.name}' must increase")
        return self


class SimConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_patients: PositiveInt = 200
    T_range: tuple[PositiveInt, PositiveInt] = (6, 12)
    visit_gap: PositiveFloat = 1.0
    n_factors: PositiveInt = 4
    features: list[SimFeature]
    loading_matrix: list[list[float]]
    noise_sd: list[PositiveFloat]
    missing_rate_x: Probability = Field(default=0.2, ge=0.0, le=1.0)
    missing_rate_y: Probability = Field(default=0.2, ge=0.0, le=1.0)
    seed: int = 0
    autoregression: float = Field(default=0.95, ge=0.0, le=1.0)
    process_noise: PositiveFloat = 0.05
    initial_sd: float = Field(default=1.0, ge=0.0)
    drift: list[float] | None = None
    static_fields: list[StaticField] = []
    static_effect: list[list[float]] | None = None
    n_bundles: PositiveInt = 1
    bundle_offsets: list[list[float]] | None = None
    bundle_drift: list[list[float]] | None = None
    concept_groups: list[str] = []
    rules_path: str | None = None

    @model_validator(mode="after")
    def check_dimensions(self) -> "SimConfig":
        D, F = len(self.features), self.n_factors
        if self.T_range[0] > self.T_range[1]:
            raise ValueError("T_range must be (min, max) with min <= max")
        if len(self.loading_matrix) != D or any(len(r) != F for r in self.loading_matrix):
            raise ValueError(f"loading_matrix must be {D} x {F}")
        if len(self.noise_sd) != D:
            raise ValueError(f"noise_sd needs one value per feature ({D})")
        if self.drift is not None and len(self.drift) != F:
            raise ValueError(f"drift needs one value per factor ({F})")
        S = len(self.static_fields)
        if self.static_effect is not None and (
            len(self.static_effect) != F or any(len(r) != S for r in self.static_effect)
        ):
            raise ValueError(f"static_effect must be {F} x {S}")
        for name in ("bundle_offsets", "bundle_drift"):
            value = getattr(self, name)
            if value is not None and (
                len(value) != self.n_bundles or any(len(r) != F for r in value)
            ):
                raise ValueError(f"{name} must be {self.n_bundles} x {F}")
        return self

    @property
    def loading(self) -> np.ndarray:
        return np.asarray(self.loading_matrix, dtype=float)

    def rules(self) -> ConceptRuleSet:
        rules = (
            ConceptRuleSet.from_file(self.rules_path)
            if self.rules_path
            else ConceptRuleSet.default()
        )
        return rules.select(self.concept_groups).restrict_to(
            f.name for f in self.features
        )

    def schema(self) -> FeatureSchema:
        continuous = [
            ContinuousFeature(name=f.name, unit=f.unit)
            for f in self.features
            if f.kind == "continuous"
        ]
        categorical = [
            CategoricalFeature(
                name=f.name, num_classes=len(f.thresholds) + 1, levels=f.levels
            )
            for f in self.features
            if f.kind == "categorical"
        ]
        return FeatureSchema(
            continuous_features=continuous,
            categorical_features=categorical,
            concepts=self.rules().concept_specs(),
            static_fields=self.static_fields,
        )

    def column_order(self) -> list[int]:
        """Indices into `features` in schema column order (continuous first)."""
        continuous = [i for i, f in enumerate(self.features) if f.kind == "continuous"]
        categorical = [i for i, f in enumerate(self.features) if f.kind == "categorical"]
        return continuous + categorical


def _static_values(config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    values = []
    for field in config.static_fields:
        if field.kind == "continuous":
            values.append(rng.normal())
        else:
            values.append(float(rng.random() < 0.5))
    return np.asarray(values, dtype=float)


def simulate_factor_paths(
    config: SimConfig,
    times: np.ndarray,
    static: np.ndarray,
    bundle: int,
    rng: np.random.Generator,
) -> np.ndarray:
    F = config.n_factors
    drift = np.zeros(F) if config.drift is None else np.asarray(config.drift)
    if config.static_effect is not None and static.size:
        drift = drift + np.asarray(config.static_effect) @ static
    start = np.zeros(F)
    if config.bundle_drift is not None:
        drift = drift + np.asarray(config.bundle_drift[bundle])
    if config.bundle_offsets is not None:
        start = start + np.asarray(config.bundle_offsets[bundle])

    paths = np.zeros((times.shape[0], F))
    paths[0] = start + config.initial_sd * rng.normal(size=F)
    for t in range(1, times.shape[0]):
        gap = times[t] - times[t - 1]
        paths[t] = (
            config.autoregression * paths[t - 1]
            + drift * gap
            + math.sqrt(gap * config.process_noise) * rng.normal(size=F)
        )
    return paths


def measurements(
    config: SimConfig, paths: np.ndarray, noise: np.ndarray | None
) -> np.ndarray:
    """T x D measurement matrix in schema column order; noise=None gives the clean values."""
    scores = paths @ config.loading.T
    if noise is not None:
        scores = scores + noise * np.asarray(config.noise_sd)
    columns = []
    for index in config.column_order():
        feature = config.features[index]
        if feature.kind == "continuous":
            columns.append(feature.offset + scores[:, index])
        else:
            columns.append(
                np.searchsorted(feature.thresholds, scores[:, index]).astype(float)
            )
    return np.stack(columns, axis=1)


def simulate_patient(
    config: SimConfig,
    index: int,
    schema: FeatureSchema,
    rules: ConceptRuleSet,
    stage_seed: int,
) -> tuple[PatientRecord, int]:
    rng = patient_rng(stage_seed, index)
    T = int(rng.integers(config.T_range[0], config.T_range[1] + 1))
    gaps = config.visit_gap * rng.uniform(0.5, 1.5, size=T - 1)
    times = np.concatenate([[0.0], np.cumsum(gaps)])
    static = _static_values(config, rng)
    bundle = int(rng.integers(config.n_bundles))
    paths = simulate_factor_paths(config, times, static, bundle, rng)

    clean = measurements(config, paths, noise=None)
    observed = measurements(config, paths, noise=rng.normal(size=(T, len(config.features))))
    full_mask = np.ones_like(clean, dtype=bool)
    y, mask_y = label_matrix(clean, full_mask, schema, rules)

    record = PatientRecord(
        id=f"p{index:05d}",
        static=static,
        times=times,
        x=observed,
        mask_x=full_mask,
        y=y,
        mask_y=mask_y,
        factors=paths,
    )
    return record, bundle


def apply_missingness(
    cohort: Cohort, rate_x: float, rate_y: float, seed: int
) -> Cohort:
    """Mask cells iid; a patient's first visit always keeps at least one measurement."""
    if not (0.0 <= rate_x <= 1.0 and 0.0 <= rate_y <= 1.0):
        raise ValueError("missingness rates must lie in [0, 1]")
    stage_seed = derive_seed(seed, "missingness")
    patients = []
    for index, record in enumerate(cohort.patients):
        rng = patient_rng(stage_seed, index)
        drop_x = rng.random(record.x.shape) < rate_x
        drop_y = rng.random(record.y.shape) < rate_y
        mask_x = record.mask_x & ~drop_x
        if record.mask_x[0].any() and not mask_x[0].any():
            keep = rng.choice(np.nonzero(record.mask_x[0])[0])
            mask_x[0, keep] = True
        mask_y = record.mask_y & ~drop_y
        patients.append(
            record.with_values(
                x=np.where(mask_x, record.x, np.nan),
                mask_x=mask_x,
                y=np.where(mask_y, record.y, np.nan),
                mask_y=mask_y,
            )
        )
    return cohort.with_patients(patients)


def simulate_cohort(config: SimConfig) -> Cohort:
    """Simulate a labeled cohort; identical configs give identical cohorts."""
    schema = config.schema()
    rules = config.rules()
    stage_seed = derive_seed(config.seed, "simulate")
    patients, bundles = [], {}
    for index in range(config.n_patients):
        record, bundle = simulate_patient(config, index, schema, rules, stage_seed)
        patients.append(record)
        bundles[record.id] = bundle

    cohort = Cohort(patients=patients, schema=schema, meta={"bundles": bundles})
    cohort = apply_missingness(
        cohort, config.missing_rate_x, config.missing_rate_y, config.seed
    )
    observed_y = sum(int(p.mask_y.sum()) for p in cohort.patients)
    logger.info(
        f"Simulated {len(cohort)} patients "
        f"({sum(p.T for p in cohort.patients)} visits, {observed_y} observed labels)"
    )
    return cohort
