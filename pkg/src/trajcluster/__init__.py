from .dtw import dtw_bruteforce, dtw_distance
from .exceptions import ClusteringError
from .latent import (
    LatentTrajectory,
    latent_frame_rows,
    latent_trajectories,
    latent_trajectory,
    zscore_trajectories,
)
from .medoids import (
    ClusterConfig,
    KMedoidsResult,
    cluster_agreement,
    kmedoids,
    knn,
    pairwise_distances,
)
from .probe import ProbeResult, linear_probe_accuracy, probe_guided_groups
from .profiles import medoid_profiles

__all__ = [
    "ClusterConfig",
    "ClusteringError",
    "KMedoidsResult",
    "LatentTrajectory",
    "ProbeResult",
    "cluster_agreement",
    "dtw_bruteforce",
    "dtw_distance",
    "kmedoids",
    "knn",
    "latent_frame_rows",
    "latent_trajectories",
    "latent_trajectory",
    "linear_probe_accuracy",
    "medoid_profiles",
    "pairwise_distances",
    "probe_guided_groups",
    "zscore_trajectories",
]
