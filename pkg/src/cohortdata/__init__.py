from .exceptions import CohortError, CohortParseError, SplitError
from .io import parse_cohort, serialize_cohort
from .records import Cohort, PatientRecord
from .schema import (
    CategoricalFeature,
    ConceptSpec,
    ContinuousFeature,
    FeatureSchema,
    StaticField,
)
from .transforms import (
    CohortStats,
    ScalerStats,
    filter_min_visits,
    split,
    standardize,
    standardize_record,
)

__all__ = [
    "CategoricalFeature",
    "Cohort",
    "CohortError",
    "CohortParseError",
    "CohortStats",
    "ConceptSpec",
    "ContinuousFeature",
    "FeatureSchema",
    "PatientRecord",
    "ScalerStats",
    "SplitError",
    "StaticField",
    "filter_min_visits",
    "parse_cohort",
    "serialize_cohort",
    "split",
    "standardize",
    "standardize_record",
]
