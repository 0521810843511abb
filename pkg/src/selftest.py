"""
Built-in verification suites run by the `selftest` command.

Each suite returns a SuiteResult; none of them needs data files. The toy builders are
shared with the test-suite fixtures.
"""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.stats import norm

from src.cohortdata.records import Cohort, PatientRecord
from src.cohortdata.schema import (
    CategoricalFeature,
    ConceptSpec,
    ContinuousFeature,
    FeatureSchema,
    StaticField,
)
from src.cohortdata.transforms import ScalerStats
from src.diffkernel.gradcheck import finite_difference_check
from src.diffkernel.tape import Tape
from src.genmodel.config import GuidanceGroup, GuidancePartition, ModelConfig
from src.genmodel.inputs import PatientTensors
from src.genmodel.model import TrainedModel, build_model
from src.genmodel.networks import GaussianParams
from src.trajcluster.dtw import dtw_bruteforce, dtw_distance
from src.varinference.losses import kl_diag_gaussian
from src.varinference.objective import (
    KDraw,
    LossBreakdown,
    TrainConfig,
    elbo_loss,
    patient_loss,
)

GRADIENT_TOLERANCE = 1e-3


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str


def toy_schema() -> FeatureSchema:
    """Four measurements (three continuous, one 3-class), two concepts, one static."""
    return FeatureSchema(
        continuous_features=[ContinuousFeature(name=n) for n in ("a", "b", "c")],
        categorical_features=[CategoricalFeature(name="d", num_classes=3)],
        concepts=[
            ConceptSpec(name="g1_involvement", num_classes=2, group="g1"),
            ConceptSpec(name="g2_stage", num_classes=4, group="g2"),
        ],
        static_fields=[StaticField(name="s0")],
    )


def toy_model_config(**overrides) -> ModelConfig:
    """L=4 with groups g1 -> z[0:2], g2 -> z[2:4] and narrow networks."""
    values = dict(
        latent_dim=4,
        partition=GuidancePartition(
            groups=[
                GuidanceGroup(group="g1", latent_indices=[0, 1]),
                GuidanceGroup(group="g2", latent_indices=[2, 3]),
            ]
        ),
        recurrent_width=5,
        dense_width=6,
        guidance_width=4,
        prior_width=5,
        dropout=0.0,
    )
    values.update(overrides)
    return ModelConfig(**values)


def toy_record(
    patient_id: str, T: int, rng: np.random.Generator, missing: float = 0.3  # noqa: N803
) -> PatientRecord:
    arrivals = np.cumsum(rng.uniform(0.5, 1.5, size=T))
    times = arrivals - arrivals[0]
    x = np.column_stack(
        [rng.normal(size=(T, 3)), rng.integers(0, 3, size=(T, 1)).astype(float)]
    )
    y = np.column_stack(
        [rng.integers(0, 2, size=T), rng.integers(0, 4, size=T)]
    ).astype(float)
    mask_x = rng.random(x.shape) >= missing
    mask_x[0, 0] = True
    mask_y = rng.random(y.shape) >= missing
    return PatientRecord(
        id=patient_id,
        static=rng.normal(size=1),
        times=times,
        x=np.where(mask_x, x, np.nan),
        mask_x=mask_x,
        y=np.where(mask_y, y, np.nan),
        mask_y=mask_y,
    )


def toy_cohort(n: int = 2, T: int = 3, seed: int = 0) -> Cohort:  # noqa: N803
    rng = np.random.default_rng(seed)
    return Cohort(
        patients=[toy_record(f"t{i:03d}", T, rng) for i in range(n)],
        schema=toy_schema(),
    )


def toy_model(seed: int = 0, **overrides) -> TrainedModel:
    schema = toy_schema()
    scaler = ScalerStats(mean=[0.0] * 3, std=[1.0] * 3)
    return build_model(toy_model_config(**overrides), schema, scaler, seed)


def fixed_draws(
    inputs: PatientTensors, latent_dim: int, rng: np.random.Generator, samples: int = 1
) -> list[KDraw]:
    """Every conditioning length at weight 1 with fixed noise."""
    return [
        KDraw(k=k, weight=1.0, noise=rng.standard_normal((samples, inputs.T, latent_dim)))
        for k in range(inputs.T + 1)
    ]


def gradient_suite(max_entries_per_param: int | None = 8) -> SuiteResult:
    model = toy_model(seed=1)
    cohort = toy_cohort(n=2, T=3, seed=2)
    train = TrainConfig(alpha=0.2, beta=0.01)
    rng = np.random.default_rng(3)
    prepared = []
    for record in cohort:
        inputs = model.tensors(record)
        prepared.append((inputs, fixed_draws(inputs, model.config.latent_dim, rng)))

    def objective(tape: Tape):
        nodes = [
            patient_loss(tape, model.config, model.schema, inputs, draws, train)[0]
            for inputs, draws in prepared
        ]
        return tape.add(nodes[0], nodes[1])

    error = finite_difference_check(
        objective,
        model.params,
        max_entries_per_param=max_entries_per_param,
        rng=np.random.default_rng(4),
    )
    return SuiteResult(
        "gradient-check",
        error < GRADIENT_TOLERANCE,
        f"max relative error {error:.2e} (tolerance {GRADIENT_TOLERANCE:g})",
    )


def kl_monte_carlo(
    q_mean: np.ndarray,
    q_sd: np.ndarray,
    p_mean: np.ndarray,
    p_sd: np.ndarray,
    draws: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """MC estimate of E_q[ln q - ln p] summed over cells, and its standard error."""
    samples = q_mean + q_sd * rng.standard_normal((draws, *q_mean.shape))
    log_ratio = norm.logpdf(samples, q_mean, q_sd) - norm.logpdf(samples, p_mean, p_sd)
    per_draw = log_ratio.reshape(draws, -1).sum(axis=1)
    return float(per_draw.mean()), float(per_draw.std(ddof=1) / np.sqrt(draws))


def analytic_kl(
    q_mean: np.ndarray, q_sd: np.ndarray, p_mean: np.ndarray, p_sd: np.ndarray
) -> float:
    tape = Tape()
    q = GaussianParams(tape.constant(q_mean), tape.constant(q_sd))
    p = GaussianParams(tape.constant(p_mean), tape.constant(p_sd))
    return kl_diag_gaussian(tape, q, p).item()


def kl_suite(pairs: int = 10, draws: int = 100_000, sigmas: float = 3.0) -> SuiteResult:
    rng = np.random.default_rng(5)
    failures = 0
    for _ in range(pairs):
        shape = (2, 2)
        q_mean, p_mean = rng.normal(size=shape), rng.normal(size=shape)
        q_sd, p_sd = rng.uniform(0.3, 2.0, size=shape), rng.uniform(0.3, 2.0, size=shape)
        estimate, se = kl_monte_carlo(q_mean, q_sd, p_mean, p_sd, draws, rng)
        if abs(analytic_kl(q_mean, q_sd, p_mean, p_sd) - estimate) > sigmas * se:
            failures += 1
    allowed = max(1, int(np.ceil(0.01 * pairs)))
    return SuiteResult(
        "kl-monte-carlo",
        failures <= allowed,
        f"{failures} of {pairs} pairs outside {sigmas:g} standard errors",
    )


def dtw_suite(pairs: int = 200, max_length: int = 6) -> SuiteResult:
    rng = np.random.default_rng(6)
    mismatches = 0
    for _ in range(pairs):
        a = rng.normal(size=(int(rng.integers(1, max_length + 1)), 2))
        b = rng.normal(size=(int(rng.integers(1, max_length + 1)), 2))
        if dtw_distance(a, b) != dtw_bruteforce(a, b):
            mismatches += 1
    return SuiteResult(
        "dtw-oracle", mismatches == 0, f"{mismatches} of {pairs} pairs differ"
    )


def flip_masked_cells(
    record: PatientRecord, rng: np.random.Generator
) -> tuple[PatientRecord, int]:
    """Overwrite every masked x/y cell with an arbitrary value; masks unchanged."""
    x = np.where(record.mask_x, record.x, rng.normal(scale=100.0, size=record.x.shape))
    y = np.where(record.mask_y, record.y, rng.integers(0, 9, size=record.y.shape))
    flipped = int((~record.mask_x).sum() + (~record.mask_y).sum())
    return record.with_values(x=x, y=y.astype(float)), flipped


def _breakdowns(
    model: TrainedModel, record: PatientRecord, draws: list[KDraw], train: TrainConfig
) -> list[LossBreakdown]:
    inputs = model.tensors(record)
    return [
        elbo_loss(
            Tape(model.params),
            model.config,
            model.schema,
            inputs,
            draw.k,
            train,
            draw.noise,
        )[1]
        for draw in draws
    ]


def mask_suite(patients: int = 20) -> SuiteResult:
    model = toy_model(seed=7)
    cohort = toy_cohort(n=patients, T=4, seed=8)
    train = TrainConfig()
    rng = np.random.default_rng(9)
    flipped_total, changed = 0, 0
    for record in cohort:
        draws = fixed_draws(model.tensors(record), model.config.latent_dim, rng)
        flipped, count = flip_masked_cells(record, rng)
        flipped_total += count
        if _breakdowns(model, record, draws, train) != _breakdowns(
            model, flipped, draws, train
        ):
            changed += 1
    return SuiteResult(
        "mask-invariance",
        changed == 0,
        f"{flipped_total} masked cells flipped, {changed} patients changed",
    )


SUITES: dict[str, Callable[[], SuiteResult]] = {
    "gradient-check": gradient_suite,
    "kl-monte-carlo": kl_suite,
    "dtw-oracle": dtw_suite,
    "mask-invariance": mask_suite,
}


def run_selftest() -> list[SuiteResult]:
    results = []
    for name, suite in SUITES.items():
        result = suite()
        log = logger.info if result.passed else logger.error
        log(f"Selftest {name}: {'pass' if result.passed else 'FAIL'} ({result.detail})")
        results.append(result)
    return results
