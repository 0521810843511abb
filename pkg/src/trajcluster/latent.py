from dataclasses import dataclass

import numpy as np

from src.cohortdata.records import Cohort, PatientRecord
from src.cohortdata.transforms import standardize_record
from src.diffkernel.tape import Tape
from src.genmodel.model import TrainedModel
from src.genmodel.networks import encode
from src.utils.parallel import ordered_map


@dataclass(frozen=True)
class LatentTrajectory:
    patient_id: str
    H: np.ndarray  # T x L posterior means

    @property
    def T(self) -> int:  # noqa: N802
        return int(self.H.shape[0])


def _without_labels(record: PatientRecord) -> PatientRecord:
    return record.with_values(
        y=np.full(record.y.shape, np.nan), mask_y=np.zeros(record.mask_y.shape, dtype=bool)
    )


def latent_trajectory(model: TrainedModel, record: PatientRecord) -> LatentTrajectory:
    """Posterior mean of z_{1:T} given every visit of a raw-unit record.

    Concept labels are stripped before encoding.
    """
    inputs = model.tensors(standardize_record(_without_labels(record), model.scaler))
    tape = Tape(model.params)
    posterior = encode(tape, model.config, inputs, inputs.T)
    return LatentTrajectory(patient_id=record.id, H=posterior.mean_value.copy())


def latent_trajectories(
    model: TrainedModel, cohort: Cohort, threads: int = 1
) -> list[LatentTrajectory]:
    return ordered_map(lambda p: latent_trajectory(model, p), cohort.patients, threads)


def zscore_trajectories(trajectories: list[LatentTrajectory]) -> list[LatentTrajectory]:
    """Standardize every latent dimension over all visits of all trajectories."""
    stacked = np.concatenate([t.H for t in trajectories], axis=0)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    return [LatentTrajectory(t.patient_id, (t.H - mean) / std) for t in trajectories]


def latent_frame_rows(trajectories: list[LatentTrajectory], times: dict) -> list[dict]:
    """Rows (patient_id, visit, tau, z_0..z_{L-1}) for export."""
    rows = []
    for trajectory in trajectories:
        for t, z in enumerate(trajectory.H):
            row = {
                "patient_id": trajectory.patient_id,
                "visit": t,
                "tau": float(times[trajectory.patient_id][t]),
            }
            row.update({f"z_{l}": float(v) for l, v in enumerate(z)})
            rows.append(row)
    return rows
