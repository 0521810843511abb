import warnings
from pathlib import Path

import numpy as np
import pytest

from src.cohortdata import filter_min_visits, split
from src.config import load_run_config
from src.selftest import toy_cohort, toy_model, toy_schema
from src.synthgen import simulate_cohort
from src.utils.seeding import derive_seed
from src.varinference import train

ACCEPTANCE_CONFIG = Path(__file__).resolve().parents[1] / "configs" / "acceptance.yaml"


@pytest.fixture(autouse=True)
def ignore_numeric_warnings():
    warnings.filterwarnings("ignore", category=RuntimeWarning, message="Mean of empty")
    warnings.filterwarnings("ignore", category=RuntimeWarning, message="invalid value")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def schema():
    """Three continuous + one 3-class measurement, concepts g1 (2) and g2 (4)"""
    return toy_schema()


@pytest.fixture
def cohort():
    return toy_cohort(n=6, T=4, seed=3)


@pytest.fixture
def model():
    """Untrained toy model, L=4, groups g1 -> z[0:2] and g2 -> z[2:4]"""
    return toy_model(seed=0)


@pytest.fixture(scope="session")
def acceptance_run():
    """Model trained on the simulated acceptance cohort (slow tests only)

    Returns (config, train_part, test_part, result).
    """
    config = load_run_config(ACCEPTANCE_CONFIG)
    cohort = filter_min_visits(simulate_cohort(config.sim), config.min_visits)
    train_part, val_part, test_part = split(
        cohort, config.split, derive_seed(config.seed, "split")
    )
    result = train(
        train_part, val_part, config.model, config.train, seed=config.seed, threads=4
    )
    return config, train_part, test_part, result
