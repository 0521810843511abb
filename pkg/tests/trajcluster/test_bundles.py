from pathlib import Path

import numpy as np
import pytest

from src.config import load_run_config
from src.synthgen import simulate_cohort
from src.trajcluster import (
    LatentTrajectory,
    cluster_agreement,
    kmedoids,
    latent_trajectories,
    pairwise_distances,
)
from src.varinference import train

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


@pytest.fixture(scope="module")
def bundles():
    config = load_run_config(CONFIGS / "two_bundles.yaml")
    return config, simulate_cohort(config.sim)


def truth(cohort):
    return np.array([cohort.meta["bundles"][pid] for pid in cohort.ids])


def test_factor_paths_recover_bundles(bundles):
    """Test k=2 on the true factor paths separates the two simulated bundles"""
    config, cohort = bundles
    trajectories = [LatentTrajectory(p.id, p.factors) for p in cohort]
    result = kmedoids(pairwise_distances(trajectories, threads=2), 2, seed=config.seed)
    assert cluster_agreement(result.assignment, truth(cohort)) >= 0.95


@pytest.mark.slow
def test_trained_latents_recover_bundles(bundles):
    config, cohort = bundles
    half = len(cohort) // 2
    result = train(
        cohort.with_patients(cohort.patients[:half]),
        cohort.with_patients(cohort.patients[half:]),
        config.model,
        config.train,
        seed=config.seed,
        threads=4,
    )
    trajectories = latent_trajectories(result.model, cohort, threads=4)
    clusters = kmedoids(pairwise_distances(trajectories, threads=4), 2)
    assert cluster_agreement(clusters.assignment, truth(cohort)) >= 0.95
