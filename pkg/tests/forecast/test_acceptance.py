"""End-to-end recovery on the simulated acceptance cohort (slow: trains a model)."""

import numpy as np
import pytest

from src.cohortdata import CohortStats
from src.forecast import evaluate
from src.trajcluster import latent_trajectories, probe_guided_groups

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def pipeline(acceptance_run):
    config, train_part, test_part, result = acceptance_run
    report = evaluate(
        result.model,
        test_part,
        config.eval,
        CohortStats.fit(train_part),
        seed=config.seed,
        threads=4,
    )
    return config, result.model, test_part, report


def test_forecast_beats_baselines(pipeline):
    _, _, _, report = pipeline
    model_rmse = report.metric("rmse", "all_continuous", "model")
    last_rmse = report.metric("rmse", "all_continuous", "last_value")
    assert model_rmse <= 0.9 * last_rmse

    f1_gain = report.metric("macro_f1", "mean", "model") - report.metric(
        "macro_f1", "mean", "cohort"
    )
    assert f1_gain >= 0.15


def test_interval_coverage(pipeline):
    _, _, _, report = pipeline
    assert 0.90 <= report.metric("coverage", "all_continuous") <= 0.98


def test_pooled_calibration(pipeline):
    _, _, _, report = pipeline
    assert report.metric("calibration_max_gap", "pooled") <= 0.10


def test_guided_columns_carry_their_concepts(pipeline):
    config, model, test_part, _ = pipeline
    trajectories = latent_trajectories(model, test_part, threads=4)
    results = probe_guided_groups(model, trajectories, test_part, seed=config.seed)

    for group in ("lung", "joints"):
        margins = [r.margin for r in results if r.group == group]
        assert margins
        assert np.mean(margins) >= 0.10, group
