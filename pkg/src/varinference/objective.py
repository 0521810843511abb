"""
The guided, masked negative lower bound and its sum over patients and conditioning
lengths.

For one patient and conditioning length k the loss is

    recon_cont + recon_cat + alpha * guidance + beta * kl

where the reconstruction and guidance terms are averaged over S latent draws from the
posterior q(z | x_{0:k}, c) and cover the full horizon 1..T, and kl compares that
posterior with the prior p(z | c). The cohort objective sums it over k = 0..T, or over a
uniform subsample of n lengths rescaled by (T + 1) / n.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt

from src.cohortdata.schema import FeatureSchema
from src.diffkernel.tape import Node, Tape
from src.genmodel.config import ModelConfig
from src.genmodel.inputs import PatientTensors
from src.genmodel.networks import decode, encode, guide, prior_params, reparameterize
from src.genmodel.params import ModelParameters
from src.utils.parallel import ordered_map
from src.utils.seeding import patient_rng

from .exceptions import EmptyCohortError
from .losses import kl_diag_gaussian, masked_categorical_ce, masked_gaussian_nll


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha: float = Field(default=0.2, ge=0.0)
    beta: float = Field(default=0.01, ge=0.0)
    mc_samples: PositiveInt = 1
    batch_size: PositiveInt = 32
    max_epochs: PositiveInt = 100
    patience: int = Field(default=10, ge=0)
    k_strategy: Literal["all", "subsample"] = "subsample"
    k_subsample: PositiveInt = 2
    learning_rate: float = Field(default=1e-3, gt=0.0)
    seed: int | None = None


@dataclass
class LossBreakdown:
    recon_cont: float = 0.0
    recon_cat: float = 0.0
    guidance: float = 0.0
    kl: float = 0.0
    total: float = 0.0
    n_cont: float = 0.0
    n_cat: float = 0.0
    n_guidance: float = 0.0
    n_terms: int = 0

    def __add__(self, other: "LossBreakdown") -> "LossBreakdown":
        return LossBreakdown(
            recon_cont=self.recon_cont + other.recon_cont,
            recon_cat=self.recon_cat + other.recon_cat,
            guidance=self.guidance + other.guidance,
            kl=self.kl + other.kl,
            total=self.total + other.total,
            n_cont=self.n_cont + other.n_cont,
            n_cat=self.n_cat + other.n_cat,
            n_guidance=self.n_guidance + other.n_guidance,
            n_terms=self.n_terms + other.n_terms,
        )

    def scaled(self, factor: float) -> "LossBreakdown":
        """Loss terms times `factor`; observed counts and term count untouched."""
        return LossBreakdown(
            recon_cont=self.recon_cont * factor,
            recon_cat=self.recon_cat * factor,
            guidance=self.guidance * factor,
            kl=self.kl * factor,
            total=self.total * factor,
            n_cont=self.n_cont,
            n_cat=self.n_cat,
            n_guidance=self.n_guidance,
            n_terms=self.n_terms,
        )

    def as_row(self) -> dict[str, float]:
        return {
            "recon_cont": self.recon_cont,
            "recon_cat": self.recon_cat,
            "guidance": self.guidance,
            "kl": self.kl,
            "total": self.total,
        }


@dataclass(frozen=True)
class KDraw:
    """One term of a patient's objective: conditioning length, weight and MC noise."""

    k: int
    weight: float
    noise: np.ndarray


def _sum_nodes(tape: Tape, nodes: Sequence[Node]) -> Node:
    if not nodes:
        return tape.constant(0.0)
    total = nodes[0]
    for node in nodes[1:]:
        total = tape.add(total, node)
    return total


def elbo_loss(
    tape: Tape,
    config: ModelConfig,
    schema: FeatureSchema,
    inputs: PatientTensors,
    k: int,
    train: TrainConfig,
    noise: np.ndarray,
    rng: np.random.Generator | None = None,
) -> tuple[Node, LossBreakdown]:
    """Negative guided lower bound L_k of one patient; `rng` drives dropout (None = off).

    `noise` holds the standard normal draws, shape (S, T, L).
    """
    noise = np.asarray(noise, dtype=float)
    if noise.ndim == 2:
        noise = noise[None]
    draws = noise.shape[0]

    posterior = encode(tape, config, inputs, k, rng)
    z = reparameterize(tape, posterior, noise)
    context = np.tile(inputs.context, (draws, 1))
    likelihood = decode(tape, config, schema, z, context, rng)

    def tiled(values: np.ndarray) -> np.ndarray:
        return np.tile(values, (draws, 1)) if values.ndim == 2 else np.tile(values, draws)

    inv = 1.0 / draws
    recon_cont = tape.scale(
        masked_gaussian_nll(
            tape,
            tiled(inputs.cont_values),
            tiled(inputs.cont_mask),
            likelihood.cont_mean,
            likelihood.cont_sd,
        ),
        inv,
    )
    cat_terms = [
        masked_categorical_ce(
            tape, tiled(inputs.cat_index[:, j]), tiled(inputs.cat_mask[:, j]), probs
        )
        for j, probs in enumerate(likelihood.cat_probs)
    ]
    recon_cat = tape.scale(_sum_nodes(tape, cat_terms), inv)

    guidance_terms = []
    n_guidance = 0.0
    if config.partition.groups:
        for j, probs in enumerate(guide(tape, config, schema, z, context, rng)):
            if probs is None:
                continue
            guidance_terms.append(
                masked_categorical_ce(
                    tape, tiled(inputs.y_index[:, j]), tiled(inputs.y_mask[:, j]), probs
                )
            )
            n_guidance += float(inputs.y_mask[:, j].sum())
    guidance = tape.scale(_sum_nodes(tape, guidance_terms), inv)

    terms = [recon_cont, recon_cat]
    if train.alpha > 0.0 and guidance_terms:
        terms.append(tape.scale(guidance, train.alpha))
    kl_value = 0.0
    if config.probabilistic:
        prior = prior_params(tape, config, inputs.context, rng)
        kl = kl_diag_gaussian(tape, posterior, prior)
        kl_value = kl.item()
        if train.beta > 0.0:
            terms.append(tape.scale(kl, train.beta))
    total = _sum_nodes(tape, terms)

    breakdown = LossBreakdown(
        recon_cont=recon_cont.item(),
        recon_cat=recon_cat.item(),
        guidance=guidance.item(),
        kl=kl_value,
        total=total.item(),
        n_cont=float(inputs.cont_mask.sum()),
        n_cat=float(inputs.cat_mask.sum()),
        n_guidance=n_guidance,
        n_terms=1,
    )
    return total, breakdown


def sample_k_draws(
    inputs: PatientTensors,
    train: TrainConfig,
    latent_dim: int,
    rng: np.random.Generator,
    strategy: Literal["all", "subsample"] | None = None,
) -> list[KDraw]:
    """Conditioning lengths for one patient with their weights and MC noise.

    `all` uses every k in 0..T at weight 1. `subsample` draws n distinct lengths
    uniformly and weights each by (T + 1) / n.
    """
    strategy = strategy or train.k_strategy
    lengths = inputs.T + 1
    if strategy == "all":
        ks = np.arange(lengths)
        weight = 1.0
    else:
        n = min(train.k_subsample, lengths)
        ks = np.sort(rng.choice(lengths, size=n, replace=False))
        weight = lengths / n
    return [
        KDraw(
            k=int(k),
            weight=weight,
            noise=rng.standard_normal((train.mc_samples, inputs.T, latent_dim)),
        )
        for k in ks
    ]


def patient_loss(
    tape: Tape,
    config: ModelConfig,
    schema: FeatureSchema,
    inputs: PatientTensors,
    draws: Sequence[KDraw],
    train: TrainConfig,
    dropout_rng: np.random.Generator | None = None,
) -> tuple[Node, LossBreakdown]:
    nodes = []
    breakdown = LossBreakdown()
    for draw in draws:
        loss, terms = elbo_loss(
            tape, config, schema, inputs, draw.k, train, draw.noise, dropout_rng
        )
        nodes.append(tape.scale(loss, draw.weight))
        breakdown = breakdown + terms.scaled(draw.weight)
    return _sum_nodes(tape, nodes), breakdown


@dataclass
class ObjectiveResult:
    total: float
    grads: ModelParameters | None
    breakdown: LossBreakdown


def cohort_objective(
    params: ModelParameters,
    config: ModelConfig,
    schema: FeatureSchema,
    patients: Sequence[PatientTensors],
    train: TrainConfig,
    stage_seed: int,
    indices: Sequence[int] | None = None,
    strategy: Literal["all", "subsample"] | None = None,
    with_grad: bool = True,
    dropout: bool = True,
    threads: int = 1,
) -> ObjectiveResult:
    """Sum of per-patient objectives with gradients, reduced in patient order.

    Patient i draws its lengths, noise and dropout masks from a generator keyed on
    (stage_seed, indices[i]), so the result is independent of `threads`.
    """
    if not patients:
        raise EmptyCohortError("objective requested over an empty cohort")
    indices = list(range(len(patients))) if indices is None else list(indices)

    def one(item: tuple[int, PatientTensors]) -> tuple[ModelParameters | None, LossBreakdown]:
        index, inputs = item
        rng = patient_rng(stage_seed, index)
        draws = sample_k_draws(inputs, train, config.latent_dim, rng, strategy)
        tape = Tape(params)
        loss, breakdown = patient_loss(
            tape, config, schema, inputs, draws, train, rng if dropout else None
        )
        return (tape.backward(loss) if with_grad else None), breakdown

    results = ordered_map(one, list(zip(indices, patients, strict=True)), threads)

    breakdown = LossBreakdown()
    grads: ModelParameters | None = None
    for patient_grads, patient_breakdown in results:
        breakdown = breakdown + patient_breakdown
        if patient_grads is None:
            continue
        if grads is None:
            grads = {name: g.copy() for name, g in patient_grads.items()}
        else:
            for name, g in patient_grads.items():
                grads[name] += g
    return ObjectiveResult(total=breakdown.total, grads=grads, breakdown=breakdown)
