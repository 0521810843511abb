"""Parameter store layout for the four networks.

All weights live in one flat ``dict[str, ndarray]``. Names are prefixed by the network
that owns them:

    posterior.*   (theta) recurrent encoder and its dense heads
    prior.*       (phi)   context -> latent moments
    likelihood.*  (pi)    latent + context -> measurement distribution
    guidance.*    (gamma) one classifier head per guided concept
"""

import numpy as np

from src.cohortdata.schema import FeatureSchema
from src.diffkernel.layers import init_dense, init_lstm

from .config import ModelConfig
from .exceptions import CheckpointError

ModelParameters = dict[str, np.ndarray]

NETWORKS = ("posterior", "prior", "likelihood", "guidance")


def context_dim(schema: FeatureSchema) -> int:
    """c_t = (tau_t, s)."""
    return 1 + schema.S


def encoder_input_dim(schema: FeatureSchema) -> int:
    """Zero-filled continuous values, one-hot categoricals, D mask channels, dtau, tau, s."""
    one_hot = sum(f.num_classes for f in schema.categorical_features)
    return schema.n_continuous + one_hot + schema.D + 2 + schema.S


def decoder_output_dim(schema: FeatureSchema) -> int:
    return schema.n_continuous + sum(f.num_classes for f in schema.categorical_features)


def guidance_input_dim(config: ModelConfig, schema: FeatureSchema, width: int) -> int:
    return width + (context_dim(schema) if config.guide_uses_context else 0)


def init_parameters(
    config: ModelConfig,
    schema: FeatureSchema,
    rng: np.random.Generator,
    zero_output: bool = False,
) -> ModelParameters:
    """Fresh weights for a resolved config; `zero_output` zero-initializes every output layer."""
    params: ModelParameters = {}
    L = config.latent_dim
    C = schema.n_continuous
    ctx = context_dim(schema)

    init_lstm(params, "posterior.lstm", encoder_input_dim(schema), config.recurrent_width, rng)
    init_dense(
        params,
        "posterior.hidden",
        config.recurrent_width + 2 + schema.S,
        config.dense_width,
        rng,
    )
    init_dense(params, "posterior.mean", config.dense_width, L, rng, zero=zero_output)
    if config.probabilistic:
        init_dense(params, "posterior.sd", config.dense_width, L, rng, zero=zero_output)

    init_dense(params, "prior.hidden", ctx, config.prior_width, rng)
    init_dense(params, "prior.mean", config.prior_width, L, rng, zero=zero_output)
    if config.probabilistic:
        init_dense(params, "prior.sd", config.prior_width, L, rng, zero=zero_output)

    init_dense(params, "likelihood.mean_hidden", L + ctx, config.dense_width, rng)
    init_dense(
        params,
        "likelihood.mean_out",
        config.dense_width,
        decoder_output_dim(schema),
        rng,
        zero=zero_output,
    )
    if config.learn_sigma and C:
        init_dense(params, "likelihood.sd_hidden", L + ctx, config.dense_width, rng)
        init_dense(params, "likelihood.sd_out", config.dense_width, C, rng, zero=zero_output)

    for group in config.partition.groups:
        n_in = guidance_input_dim(config, schema, len(group.latent_indices))
        for j in group.concept_indices or []:
            concept = schema.concepts[j]
            prefix = f"guidance.{concept.name}"
            init_dense(params, f"{prefix}.hidden", n_in, config.guidance_width, rng)
            init_dense(
                params,
                f"{prefix}.out",
                config.guidance_width,
                concept.num_classes,
                rng,
                zero=zero_output,
            )
    return params


def parameter_shapes(config: ModelConfig, schema: FeatureSchema) -> dict[str, tuple]:
    params = init_parameters(config, schema, np.random.default_rng(0), zero_output=True)
    return {name: value.shape for name, value in params.items()}


def parameter_groups(params: ModelParameters) -> dict[str, ModelParameters]:
    """Split the flat store into theta/phi/pi/gamma collections."""
    groups: dict[str, ModelParameters] = {network: {} for network in NETWORKS}
    for name, value in params.items():
        groups[name.split(".", 1)[0]][name] = value
    return groups


def check_parameters(
    params: ModelParameters, config: ModelConfig, schema: FeatureSchema
) -> None:
    expected = parameter_shapes(config, schema)
    missing = sorted(set(expected) - set(params))
    unexpected = sorted(set(params) - set(expected))
    if missing or unexpected:
        raise CheckpointError(
            "parameters do not match the model configuration",
            {"missing": missing, "unexpected": unexpected},
        )
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise CheckpointError(
                f"parameter '{name}' has shape {params[name].shape}, expected {shape}"
            )
        if not np.all(np.isfinite(params[name])):
            raise CheckpointError(f"parameter '{name}' holds non-finite values")


def copy_parameters(params: ModelParameters) -> ModelParameters:
    return {name: value.copy() for name, value in params.items()}
