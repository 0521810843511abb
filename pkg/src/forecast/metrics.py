from dataclasses import dataclass

import numpy as np
from sklearn.metrics import f1_score, mean_squared_error

from .exceptions import MetricError

N_BINS = 20


def forecast_mask(mask: np.ndarray, k: int) -> np.ndarray:
    """Restrict a T x ... mask to the forecast horizon t >= k (0-based rows)."""
    horizon = np.zeros_like(mask, dtype=bool)
    horizon[k:] = mask[k:]
    return horizon


def coverage(
    lower: np.ndarray, upper: np.ndarray, truth: np.ndarray, mask: np.ndarray
) -> float:
    """Fraction of observed cells whose true value lies in [lower, upper]."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise MetricError("coverage needs at least one observed forecast cell")
    inside = (truth[mask] >= lower[mask]) & (truth[mask] <= upper[mask])
    return float(inside.mean())


def rmse(predicted: np.ndarray, truth: np.ndarray, mask: np.ndarray) -> float:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise MetricError("RMSE needs at least one observed cell")
    return float(np.sqrt(mean_squared_error(truth[mask], predicted[mask])))


def macro_f1(predicted: np.ndarray, truth: np.ndarray, mask: np.ndarray) -> float:
    """Unweighted mean of per-class F1 over classes present in truth or prediction."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise MetricError("macro F1 needs at least one observed label")
    pred = np.asarray(predicted)[mask].astype(np.int64)
    true = np.asarray(truth)[mask].astype(np.int64)
    present = np.union1d(pred, true)
    score = f1_score(true, pred, labels=present, average="macro", zero_division=0)
    return float(score)


@dataclass
class CalibrationCurve:
    bin_edges: np.ndarray  # n_bins + 1
    mean_predicted: np.ndarray  # NaN where the bin is empty
    fraction_positive: np.ndarray
    bin_counts: np.ndarray

    @property
    def empty(self) -> np.ndarray:
        return self.bin_counts == 0

    def max_gap(self, min_count: int = 1) -> float:
        """Largest |fraction_positive - mean_predicted| over bins with >= min_count samples."""
        occupied = self.bin_counts >= min_count
        if not occupied.any():
            raise MetricError(f"no calibration bin holds {min_count} samples")
        gaps = np.abs(self.fraction_positive[occupied] - self.mean_predicted[occupied])
        return float(gaps.max())


def one_hot_pairs(
    probs: np.ndarray, labels: np.ndarray, mask: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Expand observed rows of (N, K) class probabilities into (probability, is_true) pairs."""
    mask = np.asarray(mask, dtype=bool)
    probs = probs[mask]
    labels = np.asarray(labels)[mask].astype(np.int64)
    truth = np.zeros_like(probs)
    truth[np.arange(probs.shape[0]), labels] = 1.0
    return probs.reshape(-1), truth.reshape(-1)


def calibration_curve(
    probs: np.ndarray,
    truth: np.ndarray,
    mask: np.ndarray | None = None,
    n_bins: int = N_BINS,
) -> CalibrationCurve:
    """Equal-width bins over [0, 1]; probability 1.0 falls in the last bin.

    `probs` and `truth` are one-hot expanded pairs (see `one_hot_pairs`); `mask`, of
    the same shape, drops unobserved pairs.
    """
    probs = np.asarray(probs, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        probs, truth = probs[mask], truth[mask]
    probs = probs.reshape(-1)
    truth = truth.reshape(-1)
    if np.any((probs < 0.0) | (probs > 1.0)):
        raise MetricError("calibration probabilities must lie in [0, 1]")
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    bins = np.minimum((probs * n_bins).astype(np.int64), n_bins - 1)
    counts = np.bincount(bins, minlength=n_bins)
    prob_sums = np.bincount(bins, weights=probs, minlength=n_bins)
    positive_sums = np.bincount(bins, weights=truth, minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_predicted = np.where(counts > 0, prob_sums / counts, np.nan)
        fraction_positive = np.where(counts > 0, positive_sums / counts, np.nan)
    return CalibrationCurve(
        bin_edges=edges,
        mean_predicted=mean_predicted,
        fraction_positive=fraction_positive,
        bin_counts=counts,
    )
