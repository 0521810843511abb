from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, PositiveInt
from scipy.optimize import linear_sum_assignment

from src.utils.parallel import ordered_map

from .dtw import dtw_distance
from .exceptions import ClusteringError
from .latent import LatentTrajectory

COST_TOLERANCE = 1e-9


class ClusterConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k: int = Field(default=3, ge=2)
    max_iter: PositiveInt = 100
    init: Literal["build", "random"] = "build"
    window: PositiveInt | None = None
    zscore: bool = False
    neighbors: PositiveInt = 3
    seed: int | None = None


@dataclass
class KMedoidsResult:
    assignment: np.ndarray  # cluster index per point
    medoids: np.ndarray  # point index per cluster
    cluster_costs: np.ndarray
    cost_history: list[float] = field(default_factory=list)

    @property
    def total_cost(self) -> float:
        return float(self.cluster_costs.sum())

    @property
    def n_iter(self) -> int:
        return len(self.cost_history) - 1


def pairwise_distances(
    trajectories: list[LatentTrajectory], window: int | None = None, threads: int = 1
) -> np.ndarray:
    """Symmetric DTW matrix; each unordered pair is computed once."""
    n = len(trajectories)
    if n < 2:
        raise ClusteringError(f"need at least two trajectories, got {n}")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    values = ordered_map(
        lambda pair: dtw_distance(
            trajectories[pair[0]].H, trajectories[pair[1]].H, window
        ),
        pairs,
        threads,
    )
    dist = np.zeros((n, n))
    for (i, j), value in zip(pairs, values, strict=True):
        dist[i, j] = dist[j, i] = value
    logger.info(f"Computed {len(pairs)} DTW distances between {n} trajectories")
    return dist


def _check_matrix(dist: np.ndarray) -> None:
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise ClusteringError("distance matrix must be square", dist.shape)
    if np.any(dist < 0) or np.any(np.diag(dist) != 0) or not np.allclose(dist, dist.T):
        raise ClusteringError("distance matrix must be symmetric, nonnegative, zero diagonal")


def _assign(dist: np.ndarray, medoids: np.ndarray) -> np.ndarray:
    assignment = np.argmin(dist[:, medoids], axis=1)
    assignment[medoids] = np.arange(len(medoids))
    return assignment


def _cluster_costs(dist: np.ndarray, assignment: np.ndarray, medoids: np.ndarray) -> np.ndarray:
    return np.array(
        [dist[assignment == c, m].sum() for c, m in enumerate(medoids)], dtype=float
    )


def _build_init(dist: np.ndarray, k: int) -> np.ndarray:
    """Greedy PAM BUILD: add the point that lowers the total cost most, k times."""
    medoids = [int(np.argmin(dist.sum(axis=1)))]
    nearest = dist[:, medoids[0]].copy()
    for _ in range(1, k):
        gains = np.maximum(nearest[:, None] - dist, 0.0).sum(axis=0)
        gains[medoids] = -1.0
        chosen = int(np.argmax(gains))
        medoids.append(chosen)
        nearest = np.minimum(nearest, dist[:, chosen])
    return np.asarray(medoids)


def kmedoids(
    dist: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    init: Literal["build", "random"] = "build",
) -> KMedoidsResult:
    """Alternate nearest-medoid assignment and in-cluster medoid updates to a fixpoint.

    A medoid only moves to a member with a strictly lower in-cluster distance sum (ties
    go to the smaller index), so the total cost never increases and the loop terminates.
    """
    dist = np.asarray(dist, dtype=float)
    _check_matrix(dist)
    n = dist.shape[0]
    if not 2 <= k <= n:
        raise ClusteringError(f"cluster count k={k} must lie in 2..{n}", {"k": k, "n": n})

    if init == "random":
        medoids = np.sort(np.random.default_rng(seed).choice(n, size=k, replace=False))
    else:
        medoids = _build_init(dist, k)
    assignment = _assign(dist, medoids)
    history = [float(_cluster_costs(dist, assignment, medoids).sum())]

    for _ in range(max_iter):
        updated = medoids.copy()
        for c in range(k):
            members = np.nonzero(assignment == c)[0]
            within = dist[np.ix_(members, members)].sum(axis=1)
            best = members[int(np.argmin(within))]
            current = dist[members, medoids[c]].sum()
            if within.min() < current:
                updated[c] = best
        if np.array_equal(updated, medoids):
            break
        medoids = updated
        assignment = _assign(dist, medoids)
        cost = float(_cluster_costs(dist, assignment, medoids).sum())
        if cost > history[-1] + COST_TOLERANCE:
            raise ClusteringError(
                "k-medoids cost increased", {"previous": history[-1], "current": cost}
            )
        history.append(cost)

    result = KMedoidsResult(
        assignment=assignment,
        medoids=medoids,
        cluster_costs=_cluster_costs(dist, assignment, medoids),
        cost_history=history,
    )
    logger.info(
        f"k-medoids (k={k}) converged after {result.n_iter} updates, cost {result.total_cost:.4f}"
    )
    return result


def knn(dist: np.ndarray, query: int, k: int = 3) -> np.ndarray:
    """Indices of the k nearest points, ascending distance, ties to the smaller index."""
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if not 0 <= query < n:
        raise ClusteringError(f"query index {query} outside 0..{n - 1}")
    if not 1 <= k < n:
        raise ClusteringError(f"neighbor count k={k} must lie in 1..{n - 1}")
    indices = np.arange(n)
    order = np.lexsort((indices, dist[query]))
    return order[order != query][:k]


def cluster_agreement(assignment: np.ndarray, truth: np.ndarray) -> float:
    """Best fraction of matching labels over one-to-one relabelings of the clusters."""
    assignment = np.asarray(assignment, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if assignment.shape != truth.shape or assignment.size == 0:
        raise ClusteringError("assignment and truth must be equal-length, nonempty")
    clusters, assignment = np.unique(assignment, return_inverse=True)
    labels, truth = np.unique(truth, return_inverse=True)
    contingency = np.zeros((len(clusters), len(labels)))
    np.add.at(contingency, (assignment, truth), 1.0)
    rows, cols = linear_sum_assignment(contingency, maximize=True)
    return float(contingency[rows, cols].sum() / assignment.size)
