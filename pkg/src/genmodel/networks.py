"""
The four networks, evaluated on a Tape bound to the model parameters.

Row batches carry one visit per row; stacking S latent draws of a T-visit trajectory
gives S*T rows, with the context tiled to match. Every network except the posterior
encoder is per-row local, so decoding and guidance factorize over visits.
"""

from dataclasses import dataclass

import numpy as np

from src.cohortdata.schema import FeatureSchema
from src.diffkernel.exceptions import ContractError, DimensionError
from src.diffkernel.layers import LSTMWeights, dense, lstm_step
from src.diffkernel.tape import Node, Tape

from .config import ModelConfig
from .inputs import PatientTensors


@dataclass
class GaussianParams:
    """Diagonal Gaussian over a (rows, L) latent block; sd is None in deterministic mode."""

    mean: Node
    sd: Node | None = None

    @property
    def mean_value(self) -> np.ndarray:
        return self.mean.value

    @property
    def sd_value(self) -> np.ndarray:
        if self.sd is None:
            return np.zeros_like(self.mean.value)
        return self.sd.value


@dataclass
class LikelihoodParams:
    """Per-row measurement distribution; cont_sd None means sigma fixed at 1."""

    cont_mean: Node
    cont_sd: Node | None
    cat_probs: list[Node]

    @property
    def cont_sd_value(self) -> np.ndarray:
        if self.cont_sd is None:
            return np.ones_like(self.cont_mean.value)
        return self.cont_sd.value


def _hidden(
    tape: Tape, prefix: str, x: Node, rate: float, rng: np.random.Generator | None
) -> Node:
    return tape.dropout(dense(tape, prefix, x, "relu"), rate, rng)


def _positive(tape: Tape, raw: Node, floor: float) -> Node:
    return tape.shift(tape.activation("softplus", raw), floor)


def _gaussian_heads(
    tape: Tape, config: ModelConfig, network: str, hidden: Node
) -> GaussianParams:
    mean = dense(tape, f"{network}.mean", hidden)
    if not config.probabilistic:
        return GaussianParams(mean=mean)
    sd = _positive(tape, dense(tape, f"{network}.sd", hidden), config.sd_floor)
    return GaussianParams(mean=mean, sd=sd)


def prior_params(
    tape: Tape,
    config: ModelConfig,
    context: np.ndarray,
    rng: np.random.Generator | None = None,
) -> GaussianParams:
    """p_phi(z_t | c_t) for every row of context."""
    hidden = _hidden(tape, "prior.hidden", tape.constant(context), config.dropout, rng)
    return _gaussian_heads(tape, config, "prior", hidden)


def encode(
    tape: Tape,
    config: ModelConfig,
    inputs: PatientTensors,
    k: int,
    rng: np.random.Generator | None = None,
) -> GaussianParams:
    """q_theta(z_{1:T} | x_{0:k}, c): read the first k visits, emit moments for all T.

    The final recurrent state is joined with each visit's (tau_t - tau_k, tau_t, s).
    """
    if not 0 <= k <= inputs.T:
        raise ContractError(
            f"conditioning length k={k} outside 0..{inputs.T}", {"k": k, "T": inputs.T}
        )
    weights = LSTMWeights.bind(tape, "posterior.lstm")
    h = tape.constant(np.zeros(weights.hidden))
    c = tape.constant(np.zeros(weights.hidden))
    for t in range(k):
        h, c = lstm_step(tape, weights, tape.constant(inputs.encoder_inputs[t]), h, c)

    head_in = tape.concat([tape.tile_rows(h, inputs.T), tape.constant(inputs.targets(k))])
    hidden = _hidden(tape, "posterior.hidden", head_in, config.dropout, rng)
    return _gaussian_heads(tape, config, "posterior", hidden)


def reparameterize(tape: Tape, params: GaussianParams, noise: np.ndarray) -> Node:
    """z = mean + sd * noise. `noise` is (T, L) or (S, T, L); draws are stacked by rows."""
    noise = np.asarray(noise, dtype=float)
    shape = params.mean.shape
    if noise.ndim not in (2, 3) or noise.shape[-2:] != shape:
        raise DimensionError(
            "noise does not match the latent block",
            {"noise": noise.shape, "latent": shape},
        )
    draws = 1 if noise.ndim == 2 else noise.shape[0]
    mean = params.mean if draws == 1 else tape.tile_rows(params.mean, draws)
    if params.sd is None:
        return mean
    sd = params.sd if draws == 1 else tape.tile_rows(params.sd, draws)
    return tape.add(mean, tape.mul(sd, tape.constant(noise.reshape(-1, shape[1]))))


def decode(
    tape: Tape,
    config: ModelConfig,
    schema: FeatureSchema,
    z: Node,
    context: np.ndarray,
    rng: np.random.Generator | None = None,
) -> LikelihoodParams:
    """p_pi(x_t | z_t, c_t), independently per row."""
    if z.shape[0] != context.shape[0]:
        raise DimensionError(
            "latent rows and context rows differ",
            {"z": z.shape, "context": context.shape},
        )
    joined = tape.concat([z, tape.constant(context)])
    hidden = _hidden(tape, "likelihood.mean_hidden", joined, config.dropout, rng)
    out = dense(tape, "likelihood.mean_out", hidden)

    C = schema.n_continuous
    cont_mean = tape.columns(out, slice(0, C))
    cat_probs = []
    offset = C
    for feature in schema.categorical_features:
        logits = tape.columns(out, slice(offset, offset + feature.num_classes))
        cat_probs.append(tape.softmax(logits))
        offset += feature.num_classes

    cont_sd = None
    if config.learn_sigma and C:
        sd_hidden = _hidden(tape, "likelihood.sd_hidden", joined, config.dropout, rng)
        cont_sd = _positive(tape, dense(tape, "likelihood.sd_out", sd_hidden), config.sd_floor)
    return LikelihoodParams(cont_mean=cont_mean, cont_sd=cont_sd, cat_probs=cat_probs)


def guide_logits(
    tape: Tape,
    config: ModelConfig,
    schema: FeatureSchema,
    z: Node,
    context: np.ndarray,
    rng: np.random.Generator | None = None,
) -> list[Node | None]:
    """Class logits per concept, indexed like schema.concepts; None for unguided concepts.

    A head of group g only ever sees the latent columns eps(g).
    """
    logits: list[Node | None] = [None] * schema.P
    ctx = tape.constant(context) if config.guide_uses_context else None
    for group in config.partition.groups:
        restricted = tape.columns(z, np.asarray(group.latent_indices))
        if ctx is not None:
            restricted = tape.concat([restricted, ctx])
        for j in group.concept_indices or []:
            prefix = f"guidance.{schema.concepts[j].name}"
            hidden = _hidden(tape, f"{prefix}.hidden", restricted, config.dropout, rng)
            logits[j] = dense(tape, f"{prefix}.out", hidden)
    return logits


def guide(
    tape: Tape,
    config: ModelConfig,
    schema: FeatureSchema,
    z: Node,
    context: np.ndarray,
    rng: np.random.Generator | None = None,
) -> list[Node | None]:
    """p_gamma(y_t^j | z_t^{eps(g)}) class probabilities per concept."""
    return [
        None if node is None else tape.softmax(node)
        for node in guide_logits(tape, config, schema, z, context, rng)
    ]
