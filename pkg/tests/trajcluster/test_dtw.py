import numpy as np
import pytest

from src.selftest import dtw_suite
from src.trajcluster import ClusteringError, dtw_bruteforce, dtw_distance


def test_matches_path_enumeration():
    """Test the dynamic program against every monotone path (500 random pairs)"""
    result = dtw_suite(pairs=500)
    assert result.passed, result.detail


def test_hand_computed():
    assert dtw_distance([0.0, 1.0, 2.0], [0.0, 2.0]) == 1.0
    assert dtw_distance([[0.0, 0.0]], [[3.0, 4.0], [0.0, 0.0]]) == 5.0


def test_identical_and_symmetric(rng):
    a, b = rng.normal(size=(5, 3)), rng.normal(size=(7, 3))
    assert dtw_distance(a, a) == 0.0
    assert dtw_distance(a, b) == dtw_distance(b, a)


def test_terminal_repetition_is_free(rng):
    a = rng.normal(size=(5, 2))
    padded = np.vstack([a, np.repeat(a[-1:], 3, axis=0)])
    assert dtw_distance(a, padded) == 0.0


def test_window(rng):
    a, b = rng.normal(size=(6, 2)), rng.normal(size=(4, 2))
    assert dtw_distance(a, b, window=10) == dtw_distance(a, b)
    # the band is widened to the length difference so a path always exists
    assert np.isfinite(dtw_distance(a, b, window=1))
    assert dtw_distance(a, b, window=1) >= dtw_distance(a, b)
    assert dtw_bruteforce(a, b) == dtw_distance(a, b)


@pytest.mark.parametrize(
    "a, b",
    [
        (np.zeros((3, 2)), np.zeros((3, 3))),
        (np.zeros((0, 2)), np.zeros((3, 2))),
        (np.zeros((2, 2, 2)), np.zeros((2, 2))),
    ],
)
def test_rejects_bad_sequences(a, b):
    with pytest.raises(ClusteringError):
        dtw_distance(a, b)
