"""Tidy long-format frames of predictive summaries for the forecast command."""

import pandas as pd

from src.cohortdata.schema import FeatureSchema

from .predictive import PredictiveSamples, PriorTrajectory


def _class_rows(base: dict, name: str, kind: str, probs) -> list[dict]:
    return [
        {**base, "variable": name, "kind": kind, "statistic": f"p_{c}", "value": p}
        for c, p in enumerate(probs)
    ]


def samples_frame(
    samples: PredictiveSamples, times, schema: FeatureSchema
) -> pd.DataFrame:
    """One row per (visit, variable, statistic); rows with conditioned=1 were inputs."""
    rows = []
    C = schema.n_continuous
    for t in range(samples.T):
        base = {
            "patient_id": samples.patient_id,
            "visit": t,
            "tau": float(times[t]),
            "k": samples.k,
            "conditioned": int(t < samples.k),
        }
        for column, name in enumerate(schema.feature_names[:C]):
            for statistic, values in (
                ("mean", samples.cont_mean),
                ("sd", samples.cont_sd),
                ("lower", samples.cont_lower),
                ("upper", samples.cont_upper),
            ):
                rows.append(
                    {
                        **base,
                        "variable": name,
                        "kind": "continuous",
                        "statistic": statistic,
                        "value": values[t, column],
                    }
                )
        for j, feature in enumerate(schema.categorical_features):
            rows += _class_rows(base, feature.name, "categorical", samples.cat_probs[j][t])
        for j, concept in enumerate(schema.concepts):
            if samples.y_probs[j] is not None:
                rows += _class_rows(base, concept.name, "concept", samples.y_probs[j][t])
    return pd.DataFrame(rows)


def prior_frame(prior: PriorTrajectory, times, schema: FeatureSchema) -> pd.DataFrame:
    rows = []
    C = schema.n_continuous
    for t in range(prior.z_mean.shape[0]):
        base = {"patient_id": prior.patient_id, "visit": t, "tau": float(times[t])}
        for column, name in enumerate(schema.feature_names[:C]):
            rows.append(
                {
                    **base,
                    "variable": name,
                    "kind": "continuous",
                    "statistic": "mean",
                    "value": prior.cont_mean[t, column],
                }
            )
        for j, feature in enumerate(schema.categorical_features):
            rows += _class_rows(base, feature.name, "categorical", prior.cat_probs[j][t])
        for j, concept in enumerate(schema.concepts):
            if prior.y_probs[j] is not None:
                rows += _class_rows(base, concept.name, "concept", prior.y_probs[j][t])
    return pd.DataFrame(rows)
