import pandas as pd

from src.cohortdata.records import Cohort
from src.cohortdata.transforms import standardize_record
from src.diffkernel.tape import Tape
from src.genmodel.model import TrainedModel
from src.genmodel.networks import decode, guide

from .latent import LatentTrajectory
from .medoids import KMedoidsResult


def medoid_profiles(
    model: TrainedModel,
    cohort: Cohort,
    trajectories: list[LatentTrajectory],
    result: KMedoidsResult,
) -> pd.DataFrame:
    """Concept probabilities and decoded measurement means along each medoid trajectory."""
    config, schema = model.config, model.schema
    rows = []
    for cluster, index in enumerate(result.medoids):
        trajectory = trajectories[index]
        record = cohort.by_id(trajectory.patient_id)
        inputs = model.tensors(standardize_record(record, model.scaler))
        tape = Tape(model.params)
        z = tape.constant(trajectory.H)
        means = model.scaler.inverse(
            decode(tape, config, schema, z, inputs.context).cont_mean.value
        )
        probs = guide(tape, config, schema, z, inputs.context)
        size = int((result.assignment == cluster).sum())
        for t in range(trajectory.T):
            base = {
                "cluster": cluster,
                "medoid_patient": trajectory.patient_id,
                "cluster_size": size,
                "visit": t,
                "tau": float(record.times[t]),
            }
            for j, concept in enumerate(schema.concepts):
                if probs[j] is None:
                    continue
                for c, p in enumerate(probs[j].value[t]):
                    rows.append(
                        {**base, "variable": concept.name, "statistic": f"p_{c}", "value": p}
                    )
            for column, name in enumerate(schema.feature_names[: schema.n_continuous]):
                rows.append(
                    {**base, "variable": name, "statistic": "mean", "value": means[t, column]}
                )
    return pd.DataFrame(rows)
