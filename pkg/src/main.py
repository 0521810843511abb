import argparse
import sys
from collections.abc import Sequence

from loguru import logger

from src.cohortdata.exceptions import CohortError
from src.commands import COMMANDS, RunContext
from src.config import ConfigError, settings
from src.diffkernel.exceptions import KernelError
from src.forecast.exceptions import ForecastError
from src.genmodel.exceptions import ModelError
from src.synthgen.exceptions import SimulationError
from src.trajcluster.exceptions import ClusteringError
from src.utils import setup_logging
from src.varinference.exceptions import TrainingError

DOMAIN_ERRORS = (
    ConfigError,
    CohortError,
    KernelError,
    SimulationError,
    ModelError,
    TrainingError,
    ForecastError,
    ClusteringError,
)


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML run configuration")
    parser.add_argument("--seed", type=int, help="global seed (overrides the config)")
    parser.add_argument("--threads", type=int, help="worker threads")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")


def _split_option(parser: argparse.ArgumentParser, default: str) -> None:
    parser.add_argument(
        "--split",
        choices=["train", "val", "test", "all"],
        default=default,
        help="patients of a split recorded in the checkpoint",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latent-traj",
        description="Guided temporal latent-variable models for patient trajectories",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("simulate", help="simulate a rule-labeled cohort")
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("train", help="train a model on a cohort")
    p.add_argument("--cohort", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--history", help="per-epoch loss CSV (default: <out>_history.csv)")
    p.add_argument("--init", help="checkpoint to warm-start from")
    p.add_argument("--min-visits", type=int, help="drop shorter trajectories")
    _common(p)

    p = sub.add_parser("evaluate", help="forecast metrics against baselines")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--cohort", required=True)
    p.add_argument("--report", required=True)
    _split_option(p, "test")
    _common(p)

    p = sub.add_parser("forecast", help="Monte-Carlo predictive samples")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--cohort", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", default="0.5", help="visits to condition on, int or fraction")
    p.add_argument("--patient", help="forecast a single patient")
    p.add_argument("--prior", action="store_true", help="prior trajectories (no data)")
    p.add_argument("--samples", type=int, help="latent draws")
    p.add_argument("--draws", type=int, help="observation draws per latent draw")
    _split_option(p, "all")
    _common(p)

    p = sub.add_parser("cluster", help="k-medoids on latent trajectories")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--cohort", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--profiles", help="default: <out>_profiles.csv")
    _split_option(p, "all")
    _common(p)

    p = sub.add_parser("neighbors", help="nearest patients by DTW distance")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--cohort", required=True)
    p.add_argument("--patient", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--out")
    _split_option(p, "all")
    _common(p)

    p = sub.add_parser("export-latent", help="posterior mean trajectories as CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--cohort", required=True)
    p.add_argument("--out", required=True)
    _split_option(p, "all")
    _common(p)

    p = sub.add_parser("selftest", help="run the built-in verification suites")
    _common(p)
    return parser


def run(args: argparse.Namespace) -> int:
    try:
        ctx = RunContext.from_args(args)
        if getattr(args, "min_visits", None) is not None:
            ctx.config = ctx.config.model_copy(update={"min_visits": args.min_visits})
        if ctx.threads < 1:
            raise ConfigError("--threads must be at least 1")
        logger.info(f"Running {args.command} (seed {ctx.seed}, threads {ctx.threads})")
        return COMMANDS[args.command](args, ctx)
    except DOMAIN_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1
    except (OSError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        return 1


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    setup_logging(args.log_level or settings.log_level)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
