import numpy as np
import pytest
from scipy.stats import norm

from src.diffkernel import DimensionError, Tape
from src.genmodel import GaussianParams
from src.selftest import analytic_kl, kl_suite
from src.varinference import (
    kl_diag_gaussian,
    masked_categorical_ce,
    masked_gaussian_nll,
)


def test_gaussian_nll_matches_log_density(rng):
    """Test the masked NLL equals minus the summed log density of observed cells"""
    x = rng.normal(size=(4, 3))
    mean = rng.normal(size=(4, 3))
    sd = rng.uniform(0.5, 2.0, size=(4, 3))
    mask = rng.random((4, 3)) < 0.6
    tape = Tape()

    nll = masked_gaussian_nll(
        tape, x, mask.astype(float), tape.constant(mean), tape.constant(sd)
    )

    expected = -norm.logpdf(x, mean, sd)[mask].sum()
    assert nll.item() == pytest.approx(expected, rel=1e-12)


def test_gaussian_nll_unit_sigma(rng):
    x = rng.normal(size=(3, 2))
    mask = np.ones((3, 2))
    tape = Tape()
    nll = masked_gaussian_nll(tape, x, mask, tape.constant(np.zeros((3, 2))), None)
    assert nll.item() == pytest.approx(-norm.logpdf(x).sum())


def test_gaussian_nll_ignores_masked_values():
    """Test NaN behind a zero mask never reaches the tape"""
    x = np.array([[1.0, np.nan]])
    mask = np.array([[1.0, 0.0]])
    tape = Tape()
    nll = masked_gaussian_nll(tape, x, mask, tape.constant(np.zeros((1, 2))), None)
    assert nll.item() == pytest.approx(-norm.logpdf(1.0))


def test_gaussian_nll_shape_mismatch():
    tape = Tape()
    with pytest.raises(DimensionError, match="share one shape"):
        mean = tape.constant(np.zeros((2, 2)))
        masked_gaussian_nll(tape, np.zeros((2, 2)), np.ones((2, 3)), mean, None)


def test_categorical_ce():
    probs = np.array([[0.2, 0.8], [0.5, 0.5], [1.0, 0.0]])
    labels = np.array([1, 0, 1])
    mask = np.array([1.0, 0.0, 1.0])
    tape = Tape()

    ce = masked_categorical_ce(tape, labels, mask, tape.constant(probs))

    assert ce.item() == pytest.approx(-np.log(0.8) - np.log(1e-12))


def test_categorical_ce_shape_mismatch():
    tape = Tape()
    with pytest.raises(DimensionError, match="one entry per probability row"):
        probs = tape.constant(np.ones((3, 2)))
        masked_categorical_ce(tape, np.zeros(2), np.ones(3), probs)


def test_kl_closed_form():
    """Test KL of two univariate Gaussians against its textbook value"""
    mq, sq, mp, sp = 0.3, 0.7, -0.2, 1.5
    expected = np.log(sp / sq) + (sq**2 + (mq - mp) ** 2) / (2 * sp**2) - 0.5
    value = analytic_kl(
        np.array([[mq]]), np.array([[sq]]), np.array([[mp]]), np.array([[sp]])
    )
    assert value == pytest.approx(expected, rel=1e-12)


def test_kl_of_identical_distributions_is_zero(rng):
    mean, sd = rng.normal(size=(3, 2)), rng.uniform(0.5, 2.0, size=(3, 2))
    assert analytic_kl(mean, sd, mean, sd) == pytest.approx(0.0, abs=1e-12)


def test_kl_needs_probabilistic_blocks():
    tape = Tape()
    zeros, ones = tape.constant(np.zeros((2, 2))), tape.constant(np.ones((2, 2)))
    block = GaussianParams(zeros, ones)
    with pytest.raises(DimensionError, match="two probabilistic blocks"):
        kl_diag_gaussian(tape, block, GaussianParams(zeros))


def test_kl_matches_monte_carlo():
    """Test the analytic KL agrees with a Monte-Carlo estimate within three errors"""
    result = kl_suite(pairs=10, draws=20_000)
    assert result.passed, result.detail


@pytest.mark.slow
def test_kl_matches_monte_carlo_full():
    result = kl_suite(pairs=50, draws=1_000_000)
    assert result.passed, result.detail
