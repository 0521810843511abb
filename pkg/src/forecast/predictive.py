"""
Two-stage Monte-Carlo predictive distributions.

Stage 1 draws S latent trajectories from the posterior conditioned on the first k
visits; stage 2 draws U observation vectors per latent draw from the likelihood.
Continuous draws are reported in raw units; categorical draws are class indices.
"""

import math
from dataclasses import dataclass

import numpy as np

from src.cohortdata.records import PatientRecord
from src.cohortdata.transforms import standardize_record
from src.diffkernel.tape import Tape
from src.genmodel.model import TrainedModel
from src.genmodel.networks import decode, encode, guide, prior_params, reparameterize

from .exceptions import ForecastError

Z_95 = 1.96
QUANTILES_95 = (2.5, 97.5)


@dataclass
class PredictiveSamples:
    patient_id: str
    k: int
    z_draws: np.ndarray  # S x T x L
    x_draws: np.ndarray  # (S*U) x T x D, raw units
    cont_mean: np.ndarray  # T x C
    cont_sd: np.ndarray
    cont_lower: np.ndarray
    cont_upper: np.ndarray
    cat_probs: list[np.ndarray]  # per categorical feature, T x K
    y_probs: list[np.ndarray | None]  # per concept, T x K; None when unguided

    @property
    def T(self) -> int:  # noqa: N802
        return int(self.z_draws.shape[1])


@dataclass
class PriorTrajectory:
    """Prior-only expectations: latent prior means decoded, no measurement conditioning."""

    patient_id: str
    z_mean: np.ndarray
    cont_mean: np.ndarray
    cat_probs: list[np.ndarray]
    y_probs: list[np.ndarray | None]


def resolve_k(k: int | float, T: int) -> int:  # noqa: N803
    """Conditioning length from an absolute count or a fraction of the visits.

    Fractions in (0, 1) map to ceil(fraction * T); integers are capped at T.
    """
    if isinstance(k, float) and not k.is_integer():
        if not 0.0 < k < 1.0:
            raise ForecastError(f"fractional k must lie in (0, 1), got {k}")
        return min(T, math.ceil(k * T))
    k = int(k)
    if k < 0:
        raise ForecastError(f"k must be nonnegative, got {k}")
    return min(k, T)


def _sample_classes(probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF class draws; probs (..., K), uniforms broadcast against probs[..., 0]."""
    cdf = np.cumsum(probs, axis=-1)
    classes = (cdf < uniforms[..., None]).sum(axis=-1)
    return np.minimum(classes, probs.shape[-1] - 1)


def predictive_from_noise(
    model: TrainedModel,
    record: PatientRecord,
    k: int,
    z_noise: np.ndarray,
    x_noise: np.ndarray,
    cat_uniforms: np.ndarray,
    quantile_ci: bool = False,
) -> PredictiveSamples:
    """Deterministic core of `predict`.

    z_noise is (S, T, L), x_noise (S, U, T, C), cat_uniforms (S, U, T, n_categorical).
    `record` is in raw units.
    """
    config, schema = model.config, model.schema
    inputs = model.tensors(standardize_record(record, model.scaler))
    S, T = z_noise.shape[0], inputs.T
    U = x_noise.shape[1]
    C = schema.n_continuous

    tape = Tape(model.params)
    posterior = encode(tape, config, inputs, k)
    z = reparameterize(tape, posterior, z_noise)
    context = np.tile(inputs.context, (S, 1))
    likelihood = decode(tape, config, schema, z, context)

    mean = likelihood.cont_mean.value.reshape(S, 1, T, C)
    sd = likelihood.cont_sd_value.reshape(S, 1, T, C)
    cont = model.scaler.inverse(mean + sd * x_noise).reshape(S * U, T, C)

    cat_probs_draws = [p.value.reshape(S, T, -1) for p in likelihood.cat_probs]
    cat_draws = [
        _sample_classes(probs[:, None], cat_uniforms[..., j]).reshape(S * U, T)
        for j, probs in enumerate(cat_probs_draws)
    ]
    x_draws = np.concatenate(
        [cont] + [draws[..., None].astype(float) for draws in cat_draws], axis=-1
    )

    cont_mean = cont.mean(axis=0)
    cont_sd = cont.std(axis=0)
    if quantile_ci:
        lower, upper = np.percentile(cont, QUANTILES_95, axis=0)
    else:
        lower, upper = cont_mean - Z_95 * cont_sd, cont_mean + Z_95 * cont_sd

    y_probs: list[np.ndarray | None] = [None] * schema.P
    if config.partition.groups:
        for j, probs in enumerate(guide(tape, config, schema, z, context)):
            if probs is not None:
                y_probs[j] = probs.value.reshape(S, T, -1).mean(axis=0)

    return PredictiveSamples(
        patient_id=record.id,
        k=k,
        z_draws=z.value.reshape(S, T, -1),
        x_draws=x_draws,
        cont_mean=cont_mean,
        cont_sd=cont_sd,
        cont_lower=lower,
        cont_upper=upper,
        cat_probs=[probs.mean(axis=0) for probs in cat_probs_draws],
        y_probs=y_probs,
    )


def predict(
    model: TrainedModel,
    record: PatientRecord,
    k: int,
    S: int,  # noqa: N803
    U: int,  # noqa: N803
    rng: np.random.Generator,
    quantile_ci: bool = False,
) -> PredictiveSamples:
    """Predictive distribution of a raw-unit record given its first k visits."""
    if S < 1 or U < 1:
        raise ForecastError(f"need S >= 1 and U >= 1, got S={S}, U={U}")
    if not 0 <= k <= record.T:
        raise ForecastError(f"k={k} outside 0..{record.T}", {"k": k, "T": record.T})
    T, L = record.T, model.config.latent_dim
    schema = model.schema
    z_noise = rng.standard_normal((S, T, L))
    x_noise = rng.standard_normal((S, U, T, schema.n_continuous))
    cat_uniforms = rng.random((S, U, T, schema.n_categorical))
    return predictive_from_noise(
        model, record, k, z_noise, x_noise, cat_uniforms, quantile_ci
    )


def prior_predict(model: TrainedModel, record: PatientRecord) -> PriorTrajectory:
    """Expected trajectory under the prior, conditioned only on (tau, s)."""
    config, schema = model.config, model.schema
    inputs = model.tensors(standardize_record(record, model.scaler))
    tape = Tape(model.params)
    prior = prior_params(tape, config, inputs.context)
    likelihood = decode(tape, config, schema, prior.mean, inputs.context)
    y_probs: list[np.ndarray | None] = [None] * schema.P
    if config.partition.groups:
        for j, probs in enumerate(guide(tape, config, schema, prior.mean, inputs.context)):
            if probs is not None:
                y_probs[j] = probs.value
    return PriorTrajectory(
        patient_id=record.id,
        z_mean=prior.mean_value,
        cont_mean=model.scaler.inverse(likelihood.cont_mean.value),
        cat_probs=[p.value for p in likelihood.cat_probs],
        y_probs=y_probs,
    )
