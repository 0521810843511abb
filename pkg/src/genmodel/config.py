from pathlib import Path

import yaml
from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt

from src.cohortdata.schema import FeatureSchema

from .exceptions import ModelError, PartitionError

SSC_MODEL_PATH = Path(__file__).parent / "ssc_model.yaml"


class GuidanceGroup(BaseModel):
    """Latent columns eps(g) guided by the concepts nu(g) of one concept group.

    Indices are 0-based. `concept_indices` may be omitted in config files; it is then
    filled from the schema's concepts of the same group.
    """

    model_config = ConfigDict(extra="forbid")

    group: str
    latent_indices: list[NonNegativeInt] = Field(min_length=1)
    concept_indices: list[NonNegativeInt] | None = None


class GuidancePartition(BaseModel):
    model_config = ConfigDict(extra="forbid")

    groups: list[GuidanceGroup] = []

    def concept_to_group(self) -> dict[int, GuidanceGroup]:
        return {j: g for g in self.groups for j in (g.concept_indices or [])}

    @property
    def guided_latents(self) -> list[int]:
        return sorted(i for g in self.groups for i in g.latent_indices)


class ModelConfig(BaseModel):
    """Dimensions, widths and variant switches of the four networks."""

    model_config = ConfigDict(extra="forbid")

    latent_dim: PositiveInt = 21
    partition: GuidancePartition = GuidancePartition()
    recurrent_width: PositiveInt = 100
    dense_width: PositiveInt = 100
    guidance_width: PositiveInt = 40
    prior_width: PositiveInt = 50
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    probabilistic: bool = True
    learn_sigma: bool = True
    guide_uses_context: bool = False
    time_scale: float = Field(default=10.0, gt=0.0)
    sd_floor: float = Field(default=1e-3, gt=0.0)
    D: NonNegativeInt | None = None
    P: NonNegativeInt | None = None
    S: NonNegativeInt | None = None

    @property
    def L(self) -> int:  # noqa: N802
        return self.latent_dim

    def resolve(self, schema: FeatureSchema) -> "ModelConfig":
        """Bind to a schema: fill counts and concept indices, then validate the partition."""
        for field, actual in (("D", schema.D), ("P", schema.P), ("S", schema.S)):
            declared = getattr(self, field)
            if declared is not None and declared != actual:
                raise ModelError(
                    f"model declares {field}={declared} but the cohort schema has "
                    f"{actual}",
                    {field: actual},
                )

        groups = []
        for group in self.partition.groups:
            concepts = group.concept_indices
            if concepts is None:
                concepts = schema.concept_indices(group.group)
            groups.append(
                GuidanceGroup(
                    group=group.group,
                    latent_indices=list(group.latent_indices),
                    concept_indices=list(concepts),
                )
            )
        resolved = self.model_copy(
            update={
                "partition": GuidancePartition(groups=groups),
                "D": schema.D,
                "P": schema.P,
                "S": schema.S,
            }
        )
        resolved.check_partition(schema)
        return resolved

    def check_partition(self, schema: FeatureSchema) -> None:
        seen_latent: set[int] = set()
        seen_concepts: set[int] = set()
        for group in self.partition.groups:
            if not group.concept_indices:
                raise PartitionError(
                    f"guidance group '{group.group}' has no concepts",
                    {"group": group.group},
                )
            for index in group.latent_indices:
                if index >= self.latent_dim:
                    raise PartitionError(
                        f"latent index {index} of group '{group.group}' exceeds "
                        f"L={self.latent_dim}"
                    )
                if index in seen_latent:
                    raise PartitionError(
                        f"latent index {index} is shared between guidance groups"
                    )
                seen_latent.add(index)
            for index in group.concept_indices:
                if index >= schema.P:
                    raise PartitionError(
                        f"concept index {index} of group '{group.group}' exceeds "
                        f"P={schema.P}"
                    )
                if index in seen_concepts:
                    raise PartitionError(f"concept {index} belongs to two groups")
                seen_concepts.add(index)


def load_ssc_default() -> tuple[FeatureSchema, ModelConfig]:
    """Schema and resolved model configuration shipped for the SSc setting."""
    with open(SSC_MODEL_PATH, encoding="utf-8") as f:
        raw = yaml.safe_load(f)
    schema = FeatureSchema.model_validate(raw["schema"])
    config = ModelConfig.model_validate(raw["model"]).resolve(schema)
    return schema, config
