from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, constr, model_validator


class ContinuousFeature(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: constr(min_length=1)
    unit: str = ""


class CategoricalFeature(BaseModel):
    """A categorical measurement stored as a class index.

    `levels` maps class indices back to the raw clinical value (e.g. dyspnea stage 1-4
    stored as classes 0-3); it defaults to the class index itself.
    """

    model_config = ConfigDict(extra="forbid")

    name: constr(min_length=1)
    num_classes: int = Field(ge=2)
    levels: list[float] | None = None

    @model_validator(mode="after")
    def check_levels(self) -> "CategoricalFeature":
        if self.levels is not None and len(self.levels) != self.num_classes:
            raise ValueError(
                f"categorical feature '{self.name}' lists {len(self.levels)} levels "
                f"for {self.num_classes} classes"
            )
        return self

    def level(self, class_index: int) -> float:
        if self.levels is None:
            return float(class_index)
        return float(self.levels[class_index])


class ConceptSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: constr(min_length=1)
    num_classes: int = Field(ge=2)
    group: constr(min_length=1)


class StaticField(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: constr(min_length=1)
    kind: Literal["continuous", "binary", "categorical"] = "continuous"


class FeatureSchema(BaseModel):
    """Column layout shared by every record of a cohort.

    Measurement columns are ordered continuous first, then categorical.
    """

    model_config = ConfigDict(extra="forbid")

    continuous_features: list[ContinuousFeature] = []
    categorical_features: list[CategoricalFeature] = []
    concepts: list[ConceptSpec] = []
    static_fields: list[StaticField] = []
    medications: list[str] = []
    D: int | None = None
    P: int | None = None
    S: int | None = None

    @model_validator(mode="after")
    def check_counts(self) -> "FeatureSchema":
        names = self.feature_names + [c.name for c in self.concepts]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValueError(f"duplicate feature/concept names: {duplicates}")
        for field, actual in (
            ("D", len(self.continuous_features) + len(self.categorical_features)),
            ("P", len(self.concepts)),
            ("S", len(self.static_fields)),
        ):
            declared = getattr(self, field)
            if declared is not None and declared != actual:
                raise ValueError(f"{field}={declared} but the schema lists {actual}")
            setattr(self, field, actual)
        return self

    @property
    def n_continuous(self) -> int:
        return len(self.continuous_features)

    @property
    def n_categorical(self) -> int:
        return len(self.categorical_features)

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.continuous_features] + [
            f.name for f in self.categorical_features
        ]

    @property
    def concept_names(self) -> list[str]:
        return [c.name for c in self.concepts]

    @property
    def groups(self) -> list[str]:
        """Concept group ids in order of first appearance."""
        seen: list[str] = []
        for concept in self.concepts:
            if concept.group not in seen:
                seen.append(concept.group)
        return seen

    def concept_indices(self, group: str) -> list[int]:
        return [j for j, c in enumerate(self.concepts) if c.group == group]

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError as e:
            raise KeyError(f"Unknown feature '{name}'") from e

    def categorical(self, column: int) -> CategoricalFeature:
        """Categorical feature stored at measurement column `column`."""
        return self.categorical_features[column - self.n_continuous]

    def is_compatible(self, other: "FeatureSchema") -> bool:
        return self.model_dump(exclude={"medications"}) == other.model_dump(
            exclude={"medications"}
        )
