"""
Subcommand implementations. Each takes the parsed arguments plus a RunContext and
returns an exit status; errors propagate to `src.main.run`, which maps them to exit
codes.
"""

from argparse import Namespace
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from tabulate import tabulate

from src.cohortdata.exceptions import CohortError
from src.cohortdata.io import parse_cohort, serialize_cohort
from src.cohortdata.records import Cohort
from src.cohortdata.transforms import CohortStats, filter_min_visits, split
from src.config import ConfigError, RunConfig, load_run_config, settings
from src.forecast.evaluation import evaluate
from src.forecast.export import prior_frame, samples_frame
from src.forecast.predictive import predict, prior_predict, resolve_k
from src.genmodel.checkpoint import load_checkpoint, save_checkpoint
from src.genmodel.model import TrainedModel
from src.selftest import run_selftest
from src.synthgen.simulator import simulate_cohort
from src.trajcluster.latent import (
    latent_frame_rows,
    latent_trajectories,
    zscore_trajectories,
)
from src.trajcluster.medoids import (
    cluster_agreement,
    kmedoids,
    knn,
    pairwise_distances,
)
from src.trajcluster.profiles import medoid_profiles
from src.utils import get_logger
from src.utils.io import config_hash, write_csv_report
from src.utils.parallel import ordered_map
from src.utils.seeding import derive_seed, patient_rng
from src.varinference.exceptions import TrainingDivergedError
from src.varinference.trainer import history_frame, train

log = get_logger("cli")


@dataclass
class RunContext:
    config: RunConfig
    config_path: Path | None
    seed: int
    threads: int

    @property
    def sha(self) -> str:
        return config_hash(self.config)

    @classmethod
    def from_args(cls, args: Namespace) -> "RunContext":
        path = Path(args.config) if getattr(args, "config", None) else None
        config = load_run_config(path) if path else RunConfig(seed=settings.seed)
        seed = args.seed if args.seed is not None else config.seed
        threads = args.threads if args.threads is not None else settings.threads
        return cls(config=config, config_path=path, seed=seed, threads=threads)

    def write_csv(self, path: str | Path, frame: pd.DataFrame) -> Path:
        written = write_csv_report(path, frame, self.sha, self.seed)
        log.info(f"Wrote {len(frame)} rows to {written}")
        return written


def _sibling(path: str | Path, suffix: str) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}{suffix}")


def _select(cohort: Cohort, model: TrainedModel, part: str) -> Cohort:
    """Patients of one split recorded in the checkpoint, or the whole cohort."""
    if part == "all":
        return cohort
    ids = model.metadata.get("split_ids", {}).get(part)
    if ids is None:
        log.warning(f"Checkpoint records no '{part}' split; using the whole cohort")
        return cohort
    try:
        return cohort.with_patients([cohort.by_id(pid) for pid in ids])
    except KeyError as e:
        raise CohortError(f"cohort lacks a patient of the '{part}' split: {e}") from e


def cmd_simulate(args: Namespace, ctx: RunContext) -> int:
    if ctx.config.sim is None:
        raise ConfigError("config has no 'sim' section", ctx.config_path)
    sim = ctx.config.sim.model_copy(update={"seed": ctx.seed})
    cohort = simulate_cohort(sim)
    cohort.meta.update({"config_sha256": ctx.sha, "seed": ctx.seed})
    serialize_cohort(cohort, args.out)
    return 0


def cmd_train(args: Namespace, ctx: RunContext) -> int:
    config = ctx.config
    cohort = filter_min_visits(parse_cohort(args.cohort), config.min_visits)
    train_part, val_part, test_part = split(
        cohort, config.split, derive_seed(ctx.seed, "split")
    )
    init = load_checkpoint(args.init) if args.init else None
    metadata = {
        "config_sha256": ctx.sha,
        "seed": ctx.seed,
        "split_ids": {
            "train": train_part.ids,
            "val": val_part.ids,
            "test": test_part.ids,
        },
        "baseline_stats": CohortStats.fit(train_part).model_dump(),
    }
    try:
        result = train(
            train_part,
            val_part,
            config.model,
            config.train,
            seed=ctx.seed,
            threads=ctx.threads,
            init=init,
        )
    except TrainingDivergedError as e:
        if e.last_good is not None:
            e.last_good.metadata = {**metadata, "diverged": True}
            save_checkpoint(e.last_good, args.out)
            log.error(f"Saved last good parameters to {args.out}")
        raise

    model = result.model
    model.metadata = {**model.metadata, **metadata}
    save_checkpoint(model, args.out)
    history_path = args.history or _sibling(args.out, "_history.csv")
    ctx.write_csv(history_path, history_frame(result.history))
    last_epoch = result.history[-1].epoch
    log.info(f"Training finished: best epoch {result.best_epoch} of {last_epoch}")
    return 0


def cmd_evaluate(args: Namespace, ctx: RunContext) -> int:
    model = load_checkpoint(args.checkpoint)
    cohort = _select(parse_cohort(args.cohort), model, args.split)
    if "baseline_stats" in model.metadata:
        stats = CohortStats.model_validate(model.metadata["baseline_stats"])
    else:
        log.warning("Checkpoint lacks training statistics; fitting them on this cohort")
        stats = CohortStats.fit(cohort)
    report = evaluate(model, cohort, ctx.config.eval, stats, ctx.seed, ctx.threads)
    ctx.write_csv(args.report, report.metrics)
    ctx.write_csv(_sibling(args.report, "_calibration.csv"), report.calibration)

    metrics = report.metrics
    summary = metrics[metrics["target"].isin(["all_continuous", "mean", "pooled"])]
    print(
        tabulate(
            summary.values.tolist(), headers=list(summary.columns), tablefmt="simple"
        )
    )
    return 0


def _parse_k(text: str) -> int | float:
    try:
        return int(text)
    except ValueError:
        return float(text)


def cmd_forecast(args: Namespace, ctx: RunContext) -> int:
    model = load_checkpoint(args.checkpoint)
    cohort = _select(parse_cohort(args.cohort), model, args.split)
    if args.patient:
        cohort = cohort.with_patients([cohort.by_id(args.patient)])
    eval_config = ctx.config.eval
    samples = args.samples or eval_config.mc_samples
    draws = args.draws or eval_config.predictive_draws
    stage_seed = derive_seed(ctx.seed, "forecast")

    def one(item) -> pd.DataFrame:
        index, record = item
        if args.prior:
            return prior_frame(prior_predict(model, record), record.times, model.schema)
        k = resolve_k(_parse_k(args.k), record.T)
        predictive = predict(
            model,
            record,
            k,
            samples,
            draws,
            patient_rng(stage_seed, index),
            quantile_ci=eval_config.quantile_ci,
        )
        return samples_frame(predictive, record.times, model.schema)

    frames = ordered_map(one, list(enumerate(cohort.patients)), ctx.threads)
    ctx.write_csv(args.out, pd.concat(frames, ignore_index=True))
    return 0


def _distances(trajectories, ctx: RunContext) -> np.ndarray:
    cluster = ctx.config.cluster
    if cluster.zscore:
        trajectories = zscore_trajectories(trajectories)
    return pairwise_distances(trajectories, cluster.window, ctx.threads)


def cmd_cluster(args: Namespace, ctx: RunContext) -> int:
    cluster = ctx.config.cluster
    model = load_checkpoint(args.checkpoint)
    cohort = _select(parse_cohort(args.cohort), model, args.split)
    trajectories = latent_trajectories(model, cohort, ctx.threads)
    dist = _distances(trajectories, ctx)
    k = args.k or cluster.k
    seed = cluster.seed if cluster.seed is not None else ctx.seed
    result = kmedoids(
        dist, k, derive_seed(seed, "cluster"), cluster.max_iter, cluster.init
    )
    n, medoids = len(cohort), set(result.medoids.tolist())

    frame = pd.DataFrame(
        {
            "patient_id": cohort.ids,
            "cluster": result.assignment,
            "is_medoid": [int(i in medoids) for i in range(n)],
            "distance_to_medoid": dist[np.arange(n), result.medoids[result.assignment]],
        }
    )
    bundles = cohort.meta.get("bundles")
    if bundles:
        frame["bundle"] = [bundles.get(pid, -1) for pid in cohort.ids]
        agreement = cluster_agreement(result.assignment, frame["bundle"].to_numpy())
        log.info(f"Agreement with simulated bundles: {agreement:.3f}")
    ctx.write_csv(args.out, frame)
    profiles = medoid_profiles(model, cohort, trajectories, result)
    ctx.write_csv(args.profiles or _sibling(args.out, "_profiles.csv"), profiles)

    sizes = [
        [c, cohort.ids[m], int((result.assignment == c).sum()), result.cluster_costs[c]]
        for c, m in enumerate(result.medoids)
    ]
    headers = ["cluster", "medoid", "size", "cost"]
    print(tabulate(sizes, headers=headers, tablefmt="simple"))
    return 0


def cmd_neighbors(args: Namespace, ctx: RunContext) -> int:
    model = load_checkpoint(args.checkpoint)
    cohort = _select(parse_cohort(args.cohort), model, args.split)
    if args.patient not in cohort.ids:
        raise CohortError(
            f"Unknown patient '{args.patient}'", {"patient": args.patient}
        )
    dist = _distances(latent_trajectories(model, cohort, ctx.threads), ctx)
    query = cohort.ids.index(args.patient)
    neighbors = knn(dist, query, args.k or ctx.config.cluster.neighbors)
    frame = pd.DataFrame(
        {
            "rank": range(1, len(neighbors) + 1),
            "patient_id": [cohort.ids[i] for i in neighbors],
            "distance": dist[query, neighbors],
        }
    )
    if args.out:
        ctx.write_csv(args.out, frame)
    rows = frame.values.tolist()
    print(tabulate(rows, headers=list(frame.columns), tablefmt="simple"))
    return 0


def cmd_export_latent(args: Namespace, ctx: RunContext) -> int:
    model = load_checkpoint(args.checkpoint)
    cohort = _select(parse_cohort(args.cohort), model, args.split)
    trajectories = latent_trajectories(model, cohort, ctx.threads)
    times = {p.id: p.times for p in cohort}
    ctx.write_csv(args.out, pd.DataFrame(latent_frame_rows(trajectories, times)))
    return 0


def cmd_selftest(args: Namespace, ctx: RunContext) -> int:
    results = run_selftest()
    rows = [[r.name, "pass" if r.passed else "FAIL", r.detail] for r in results]
    print(tabulate(rows, headers=["suite", "result", "detail"], tablefmt="simple"))
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "simulate": cmd_simulate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "forecast": cmd_forecast,
    "cluster": cmd_cluster,
    "neighbors": cmd_neighbors,
    "export-latent": cmd_export_latent,
    "selftest": cmd_selftest,
}
