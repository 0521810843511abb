from .baselines import (
    baseline_cohort,
    baseline_last_label,
    baseline_last_value,
    cohort_label_draws,
    cohort_point_forecast,
)
from .evaluation import EvalConfig, EvaluationReport, evaluate
from .exceptions import ForecastError, MetricError
from .export import prior_frame, samples_frame
from .metrics import (
    CalibrationCurve,
    calibration_curve,
    coverage,
    forecast_mask,
    macro_f1,
    one_hot_pairs,
    rmse,
)
from .predictive import (
    PredictiveSamples,
    PriorTrajectory,
    predict,
    predictive_from_noise,
    prior_predict,
    resolve_k,
)

__all__ = [
    "CalibrationCurve",
    "EvalConfig",
    "EvaluationReport",
    "ForecastError",
    "MetricError",
    "PredictiveSamples",
    "PriorTrajectory",
    "baseline_cohort",
    "baseline_last_label",
    "baseline_last_value",
    "calibration_curve",
    "cohort_label_draws",
    "cohort_point_forecast",
    "coverage",
    "evaluate",
    "forecast_mask",
    "macro_f1",
    "one_hot_pairs",
    "predict",
    "predictive_from_noise",
    "prior_frame",
    "prior_predict",
    "resolve_k",
    "rmse",
    "samples_frame",
]
