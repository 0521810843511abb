from .exceptions import RuleError, SimulationError
from .rules import (
    ConceptRuleSet,
    GroupRules,
    Predicate,
    feature_row,
    label_concepts,
    label_matrix,
)
from .simulator import SimConfig, SimFeature, apply_missingness, simulate_cohort

__all__ = [
    "ConceptRuleSet",
    "GroupRules",
    "Predicate",
    "RuleError",
    "SimConfig",
    "SimFeature",
    "SimulationError",
    "apply_missingness",
    "feature_row",
    "label_concepts",
    "label_matrix",
    "simulate_cohort",
]
