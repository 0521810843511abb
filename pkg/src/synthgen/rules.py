"""
Rule labeler for medical concepts.

Each concept group (organ) yields two concepts:

- ``<group>_involvement``: 1 if any involvement predicate holds, 0 if all are false.
- ``<group>_stage``: class index 0-3 of the most severe stage whose predicates hold.

Inputs may be missing (None/NaN). By default (`missing_inputs: strict`) a concept is
labeled only when every feature its predicates reference is measured; otherwise the
label is missing. With `missing_inputs: decisive` predicates use three-valued logic,
so a missing input only produces a missing label when it could change the outcome. When
involvement holds but no stage rule is met the stage is missing rather than guessed.
"""

import math
from collections.abc import Iterable, Mapping
from functools import lru_cache
from pathlib import Path
from typing import Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from src.cohortdata.schema import ConceptSpec, FeatureSchema

from .exceptions import RuleError

N_STAGES = 4
DEFAULT_RULES_PATH = Path(__file__).parent / "concept_rules.yaml"

FeatureRow = Mapping[str, float | None]
MissingInputs = Literal["strict", "decisive"]


class Predicate(BaseModel):
    """Conjunction of comparisons on one feature, e.g. ``70 < fvc <= 80``."""

    model_config = ConfigDict(extra="forbid")

    feature: str
    eq: float | None = None
    gt: float | None = None
    ge: float | None = None
    lt: float | None = None
    le: float | None = None

    @model_validator(mode="after")
    def check_has_condition(self) -> "Predicate":
        if all(v is None for v in (self.eq, self.gt, self.ge, self.lt, self.le)):
            raise ValueError(f"predicate on '{self.feature}' has no condition")
        return self

    def evaluate(self, row: FeatureRow) -> bool | None:
        value = row.get(self.feature)
        if value is None or (isinstance(value, float) and math.isnan(value)):
            return None
        checks = (
            self.eq is None or value == self.eq,
            self.gt is None or value > self.gt,
            self.ge is None or value >= self.ge,
            self.lt is None or value < self.lt,
            self.le is None or value <= self.le,
        )
        return all(checks)


def any_of(
    predicates: list[Predicate], row: FeatureRow, strict: bool = True
) -> bool | None:
    """Three-valued OR: True if any holds, False if all are known false.

    In strict mode any unmeasured input makes the result unknown. An empty list (every
    predicate unmeasured) never holds.
    """
    results = [p.evaluate(row) for p in predicates]
    if strict and None in results:
        return None
    if any(r is True for r in results):
        return True
    if all(r is False for r in results):
        return False
    return None


class GroupRules(BaseModel):
    model_config = ConfigDict(extra="forbid")

    group: str
    involvement: list[Predicate]
    stages: list[list[Predicate]]
    unimplemented: list[str] = []

    @model_validator(mode="after")
    def check_stages(self) -> "GroupRules":
        if len(self.stages) != N_STAGES:
            raise ValueError(
                f"group '{self.group}' lists {len(self.stages)} stages, "
                f"expected {N_STAGES}"
            )
        return self

    @property
    def features(self) -> set[str]:
        predicates = self.involvement + [p for stage in self.stages for p in stage]
        return {p.feature for p in predicates}

    def involvement_label(self, row: FeatureRow, strict: bool = True) -> int | None:
        result = any_of(self.involvement, row, strict)
        return None if result is None else int(result)

    def stage_label(self, row: FeatureRow, strict: bool = True) -> int | None:
        results = [any_of(stage, row, strict) for stage in self.stages]
        if strict and None in results:
            return None
        for index in range(N_STAGES - 1, -1, -1):
            if results[index] is True:
                return index
            if results[index] is None:
                return None
        return None


class ConceptRuleSet(BaseModel):
    model_config = ConfigDict(extra="forbid")

    groups: list[GroupRules]
    missing_inputs: MissingInputs = "strict"

    @classmethod
    def from_file(cls, path: str | Path) -> "ConceptRuleSet":
        try:
            with open(path, encoding="utf-8") as f:
                return cls.model_validate(yaml.safe_load(f))
        except (OSError, yaml.YAMLError, ValidationError) as e:
            raise RuleError(f"Failed to load concept rules from {path}: {e}") from e

    @classmethod
    def default(cls) -> "ConceptRuleSet":
        return _default_rules()

    def group(self, name: str) -> GroupRules:
        for rules in self.groups:
            if rules.group == name:
                return rules
        raise RuleError(f"No rules for concept group '{name}'", {"group": name})

    def select(self, groups: Iterable[str]) -> "ConceptRuleSet":
        return ConceptRuleSet(
            groups=[self.group(name) for name in groups],
            missing_inputs=self.missing_inputs,
        )

    def restrict_to(self, features: Iterable[str]) -> "ConceptRuleSet":
        """Drop predicates over features that are not measured.

        A row from a cohort that never records, say, `lung_transplant` can then still
        be staged: in strict mode the full rule set would label every lung cell missing
        because that input is absent from every row.
        """
        available = set(features)
        restricted = []
        for rules in self.groups:
            dropped = sorted(rules.features - available)
            restricted.append(
                GroupRules(
                    group=rules.group,
                    involvement=[
                        p for p in rules.involvement if p.feature in available
                    ],
                    stages=[
                        [p for p in stage if p.feature in available]
                        for stage in rules.stages
                    ],
                    unimplemented=rules.unimplemented
                    + [f"predicates on unmeasured feature '{f}'" for f in dropped],
                )
            )
        return ConceptRuleSet(groups=restricted, missing_inputs=self.missing_inputs)

    def concept_specs(self) -> list[ConceptSpec]:
        specs = []
        for rules in self.groups:
            specs.append(
                ConceptSpec(
                    name=f"{rules.group}_involvement", num_classes=2, group=rules.group
                )
            )
            specs.append(
                ConceptSpec(
                    name=f"{rules.group}_stage", num_classes=N_STAGES, group=rules.group
                )
            )
        return specs


@lru_cache(maxsize=1)
def _default_rules() -> ConceptRuleSet:
    return ConceptRuleSet.from_file(DEFAULT_RULES_PATH)


def label_concepts(x_row: FeatureRow, rules: ConceptRuleSet) -> dict[str, int | None]:
    """Involvement flag and stage class for every group; None marks a missing label."""
    strict = rules.missing_inputs == "strict"
    labels: dict[str, int | None] = {}
    for group_rules in rules.groups:
        group = group_rules.group
        labels[f"{group}_involvement"] = group_rules.involvement_label(x_row, strict)
        labels[f"{group}_stage"] = group_rules.stage_label(x_row, strict)
    return labels


def feature_row(
    values: np.ndarray, mask: np.ndarray, schema: FeatureSchema
) -> dict[str, float | None]:
    """Raw-unit feature map for one visit; categorical classes map to their levels."""
    row: dict[str, float | None] = {}
    for column, name in enumerate(schema.feature_names):
        if not mask[column]:
            row[name] = None
        elif column >= schema.n_continuous:
            row[name] = schema.categorical(column).level(int(values[column]))
        else:
            row[name] = float(values[column])
    return row


def label_matrix(
    x: np.ndarray, mask_x: np.ndarray, schema: FeatureSchema, rules: ConceptRuleSet
) -> tuple[np.ndarray, np.ndarray]:
    """Label every visit; returns (y, mask_y) in schema.concepts order."""
    T = x.shape[0]
    y = np.full((T, schema.P), np.nan)
    for t in range(T):
        labels = label_concepts(feature_row(x[t], mask_x[t], schema), rules)
        for j, concept in enumerate(schema.concepts):
            value = labels.get(concept.name)
            if value is not None:
                y[t, j] = value
    return y, ~np.isnan(y)
