"""
Dynamic time warping between multivariate sequences.

Local cost is the Euclidean distance between rows; a path may step (1, 0), (0, 1) or
(1, 1) and must run from (0, 0) to (T_a - 1, T_b - 1). The distance is the smallest
accumulated cost over such paths.
"""

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import ClusteringError


def _as_sequence(values: np.ndarray, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.ndim != 2 or values.shape[0] < 1:
        raise ClusteringError(f"{name} must be a nonempty T x L sequence", values.shape)
    return values


def dtw_distance(a: np.ndarray, b: np.ndarray, window: int | None = None) -> float:
    """Accumulated cost D(T_a, T_b); `window` is an optional Sakoe-Chiba band half-width."""
    a = _as_sequence(a, "A")
    b = _as_sequence(b, "B")
    if a.shape[1] != b.shape[1]:
        raise ClusteringError("sequences differ in dimension", (a.shape, b.shape))
    n, m = a.shape[0], b.shape[0]
    if window is not None:
        window = max(window, abs(n - m))
    cost = cdist(a, b)

    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        lo, hi = 1, m
        if window is not None:
            lo, hi = max(1, i - window), min(m, i + window)
        for j in range(lo, hi + 1):
            acc[i, j] = cost[i - 1, j - 1] + min(
                acc[i - 1, j], acc[i, j - 1], acc[i - 1, j - 1]
            )
    return float(acc[n, m])


def dtw_bruteforce(a: np.ndarray, b: np.ndarray) -> float:
    """Minimum over an explicit enumeration of every monotone alignment path."""
    a = _as_sequence(a, "A")
    b = _as_sequence(b, "B")
    cost = cdist(a, b)
    n, m = cost.shape
    best = np.inf

    def walk(i: int, j: int, total: float) -> None:
        nonlocal best
        total += cost[i, j]
        if i == n - 1 and j == m - 1:
            best = min(best, total)
            return
        if i + 1 < n:
            walk(i + 1, j, total)
        if j + 1 < m:
            walk(i, j + 1, total)
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, total)

    walk(0, 0, 0.0)
    return float(best)
