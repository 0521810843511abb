from pathlib import Path

import pandas as pd
import pytest

from src.main import build_parser, main

CONFIGS = Path(__file__).resolve().parents[2] / "configs"

TINY = """\
seed: 3
min_visits: 4
sim:
  n_patients: 24
  T_range: [4, 6]
  n_factors: 2
  concept_groups: [lung]
  features:
    - {name: fvc, offset: 80.0}
    - {name: ild_extent, offset: 20.0}
    - {name: dlco, offset: 70.0}
    - name: dyspnea
      kind: categorical
      thresholds: [-1.0, 0.0, 1.0]
      levels: [1, 2, 3, 4]
  loading_matrix: [[-8.0, -2.0], [5.0, 2.0], [-6.0, -3.0], [0.6, 0.4]]
  noise_sd: [2.0, 1.5, 3.0, 0.2]
model:
  latent_dim: 3
  partition:
    groups:
      - {group: lung, latent_indices: [0, 1]}
  recurrent_width: 4
  dense_width: 5
  guidance_width: 3
  prior_width: 4
  dropout: 0.0
train:
  max_epochs: 2
  batch_size: 8
eval:
  mc_samples: 4
  predictive_draws: 2
  min_bin_count: 1
cluster:
  k: 2
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(TINY)
    return path


def read_report(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def run_pipeline(directory: Path, config: Path, threads: int) -> Path:
    directory.mkdir()
    common = ["--config", str(config), "--threads", str(threads)]
    cohort, checkpoint = directory / "cohort.txt", directory / "model.json"
    report = directory / "report.csv"
    assert main(["simulate", "--out", str(cohort), *common]) == 0
    train = ["train", "--cohort", str(cohort), "--out", str(checkpoint)]
    assert main([*train, *common]) == 0
    args = ["--checkpoint", str(checkpoint), "--cohort", str(cohort)]
    assert main(["evaluate", *args, "--report", str(report), *common]) == 0
    return directory


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["simulate"],
        ["train", "--cohort", "c.txt", "--out", "m.json", "--bogus"],
        ["cluster", "--checkpoint", "m", "--cohort", "c", "--out", "o", "--split", "x"],
    ],
)
def test_usage_errors_exit_2(argv):
    assert main(argv) == 2


def test_parser_defaults():
    parser = build_parser()
    inputs = ["--checkpoint", "m", "--cohort", "c"]
    args = parser.parse_args(["forecast", *inputs, "--out", "o"])
    assert args.k == "0.5"
    assert args.split == "all"
    assert not args.prior
    args = parser.parse_args(["evaluate", *inputs, "--report", "r"])
    assert args.split == "test"


def test_bad_config_exits_1(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("seed: 1\nsim_typo: {}\n")
    out = tmp_path / "c.txt"
    assert main(["simulate", "--out", str(out), "--config", str(path)]) == 1
    assert not out.exists()


def test_simulate_needs_a_sim_section(tmp_path):
    assert main(["simulate", "--out", str(tmp_path / "c.txt")]) == 1


def test_missing_inputs_exit_1(tmp_path):
    absent = tmp_path / "absent.txt"
    argv = ["train", "--cohort", str(absent), "--out", str(tmp_path / "m")]
    assert main(argv) == 1


def test_threads_must_be_positive(tmp_path, tiny_config):
    argv = ["simulate", "--out", str(tmp_path / "c.txt"), "--config", str(tiny_config)]
    assert main([*argv, "--threads", "0"]) == 1


def test_pipeline(tmp_path, tiny_config, capsys):
    """Test every subcommand on a tiny simulated cohort"""
    run = run_pipeline(tmp_path / "run", tiny_config, threads=1)
    common = ["--config", str(tiny_config)]
    args = ["--checkpoint", str(run / "model.json")]
    args += ["--cohort", str(run / "cohort.txt")]

    header = (run / "report.csv").read_text().splitlines()[0]
    assert header.startswith("# config_sha256=") and header.endswith("seed=3")
    report = read_report(run / "report.csv")
    assert {"coverage", "rmse"} <= set(report["metric"])
    assert (run / "model_history.csv").exists()
    assert (run / "report_calibration.csv").exists()

    forecast = ["forecast", *args, "--out", str(run / "f.csv"), "--k", "2"]
    assert main([*forecast, *common]) == 0
    forecast = read_report(run / "f.csv")
    assert set(forecast["k"]) == {2}
    assert forecast["patient_id"].nunique() == 24

    prior = ["forecast", *args, "--out", str(run / "p.csv"), "--prior"]
    assert main([*prior, *common]) == 0
    assert "conditioned" not in read_report(run / "p.csv").columns

    assert main(["cluster", *args, "--out", str(run / "clusters.csv"), *common]) == 0
    clusters = read_report(run / "clusters.csv")
    assert set(clusters["cluster"]) == {0, 1}
    assert clusters["is_medoid"].sum() == 2
    assert "bundle" in clusters.columns
    assert (run / "clusters_profiles.csv").exists()

    patient = clusters["patient_id"].iloc[0]
    neighbors = ["neighbors", *args, "--patient", patient, "--k", "4"]
    assert main([*neighbors, "--out", str(run / "n.csv"), *common]) == 0
    assert read_report(run / "n.csv")["rank"].tolist() == [1, 2, 3, 4]
    assert main(["neighbors", *args, "--patient", "nobody", *common]) == 1

    assert main(["export-latent", *args, "--out", str(run / "z.csv"), *common]) == 0
    latent = read_report(run / "z.csv")
    assert [c for c in latent.columns if c.startswith("z_")] == ["z_0", "z_1", "z_2"]
    assert "cluster" in capsys.readouterr().out


@pytest.mark.slow
def test_reports_are_identical_across_thread_counts(tmp_path, tiny_config):
    one = run_pipeline(tmp_path / "one", tiny_config, threads=1)
    four = run_pipeline(tmp_path / "four", tiny_config, threads=4)
    again = run_pipeline(tmp_path / "again", tiny_config, threads=1)
    for name in ("cohort.txt", "report.csv", "report_calibration.csv"):
        assert (one / name).read_bytes() == (four / name).read_bytes()
        assert (one / name).read_bytes() == (again / name).read_bytes()


@pytest.mark.slow
def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert out.count("pass") == 4
