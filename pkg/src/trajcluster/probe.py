"""
Linear probes on latent trajectories.

A probe predicts a concept at each labeled visit from a subset of latent columns of the
posterior mean trajectory. Comparing the guided columns of a group with their complement
measures how much of the concept the guided block actually carries.
"""

from dataclasses import dataclass

import numpy as np
from loguru import logger
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import accuracy_score
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from src.cohortdata.records import Cohort
from src.genmodel.model import TrainedModel

from .exceptions import ClusteringError
from .latent import LatentTrajectory

PROBE_C = 1.0


@dataclass
class ProbeResult:
    concept: str
    group: str
    guided_accuracy: float
    complement_accuracy: float
    n_train: int
    n_test: int

    @property
    def margin(self) -> float:
        return self.guided_accuracy - self.complement_accuracy


def linear_probe_accuracy(
    train_x: np.ndarray,
    train_y: np.ndarray,
    test_x: np.ndarray,
    test_y: np.ndarray,
    regularization: float = PROBE_C,
) -> float:
    """Held-out accuracy of a logistic regression on standardized features.

    A single training class or an empty column set falls back to the majority class.
    """
    if train_x.shape[0] == 0 or test_x.shape[0] == 0:
        raise ClusteringError("probe needs labeled rows in both halves")
    train_y = train_y.astype(np.int64)
    test_y = test_y.astype(np.int64)
    if np.unique(train_y).size < 2 or train_x.shape[1] == 0:
        majority = np.bincount(train_y).argmax()
        return float(accuracy_score(test_y, np.full_like(test_y, majority)))
    probe = make_pipeline(
        StandardScaler(), LogisticRegression(C=regularization, max_iter=1000)
    )
    probe.fit(train_x, train_y)
    return float(accuracy_score(test_y, probe.predict(test_x)))


def _labeled_rows(
    trajectories: list[LatentTrajectory], cohort: Cohort, concept: int
) -> tuple[np.ndarray, np.ndarray]:
    features, labels = [], []
    for trajectory, record in zip(trajectories, cohort.patients):
        observed = record.mask_y[:, concept]
        features.append(trajectory.H[observed])
        labels.append(record.y[observed, concept])
    return np.concatenate(features), np.concatenate(labels)


def probe_guided_groups(
    model: TrainedModel,
    trajectories: list[LatentTrajectory],
    cohort: Cohort,
    seed: int,
    train_fraction: float = 0.7,
) -> list[ProbeResult]:
    """Probe every guided concept from eps(g) and from the remaining latent columns.

    Patients are split once into probe-train and probe-test halves.
    """
    if len(trajectories) != len(cohort):
        raise ClusteringError("one latent trajectory per patient is required")
    order = np.random.default_rng(seed).permutation(len(cohort))
    n_train = int(round(train_fraction * len(cohort)))
    halves = [np.sort(order[:n_train]), np.sort(order[n_train:])]
    parts = [
        (
            [trajectories[i] for i in half],
            cohort.with_patients([cohort.patients[i] for i in half]),
        )
        for half in halves
    ]

    L = model.config.latent_dim
    results = []
    for group in model.config.partition.groups:
        guided = sorted(group.latent_indices)
        complement = [i for i in range(L) if i not in guided]
        for j in group.concept_indices or []:
            concept = model.schema.concepts[j]
            (train_h, train_y), (test_h, test_y) = (
                _labeled_rows(t, c, j) for t, c in parts
            )
            accuracy = {
                name: linear_probe_accuracy(
                    train_h[:, columns],
                    train_y,
                    test_h[:, columns],
                    test_y,
                )
                for name, columns in (("guided", guided), ("complement", complement))
            }
            result = ProbeResult(
                concept=concept.name,
                group=group.group,
                guided_accuracy=accuracy["guided"],
                complement_accuracy=accuracy["complement"],
                n_train=len(train_y),
                n_test=len(test_y),
            )
            logger.debug(
                f"Probe {concept.name}: guided {result.guided_accuracy:.3f}, "
                f"complement {result.complement_accuracy:.3f}"
            )
            results.append(result)
    return results
