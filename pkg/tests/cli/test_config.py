from pathlib import Path

import pytest

from src.config import ConfigError, RunConfig, Settings, load_run_config
from src.varinference import TrainConfig
from src.utils import config_hash

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


@pytest.mark.parametrize("name", ["acceptance.yaml", "two_bundles.yaml"])
def test_shipped_configs_load(name):
    config = load_run_config(CONFIGS / name)
    assert config.sim is not None
    assert config.model.partition.groups


def test_acceptance_sections():
    config = load_run_config(CONFIGS / "acceptance.yaml")
    assert config.seed == 7
    assert config.sim.n_patients == 500
    assert config.model.latent_dim == 6
    assert config.eval.k == 0.5
    assert config.cluster.k == 3
    assert config.train.alpha == TrainConfig().alpha == 0.2
    assert config.train.beta == TrainConfig().beta


def test_unknown_key_names_its_line(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("seed: 1\ntrain:\n  alpha: 0.5\n  learning_rte: 0.1\n")

    with pytest.raises(ConfigError) as info:
        load_run_config(path)
    assert info.value.line == 4
    assert "train.learning_rte" in info.value.message
    assert str(info.value).startswith(f"{path}:4: ")


def test_bad_value_names_its_line(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("seed: 1\nmodel:\n  latent_dim: 6\n  dropout: 2.0\n")
    with pytest.raises(ConfigError) as info:
        load_run_config(path)
    assert info.value.line == 4


def test_split_fractions(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("split: [0.5, 0.5, 0.5]\n")
    with pytest.raises(ConfigError, match="split"):
        load_run_config(path)


def test_invalid_yaml(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("seed: 1\nsplit: [0.7, 0.2\n")
    with pytest.raises(ConfigError, match="invalid YAML") as info:
        load_run_config(path)
    assert info.value.line is not None


def test_top_level_must_be_a_mapping(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping") as info:
        load_run_config(path)
    assert info.value.line == 1


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_run_config(tmp_path / "absent.yaml")


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("")
    assert load_run_config(path) == RunConfig()


def test_config_hash_tracks_content():
    a, b = RunConfig(seed=1), RunConfig(seed=2)
    assert config_hash(a) == config_hash(RunConfig(seed=1))
    assert config_hash(a) != config_hash(b)
    assert len(config_hash(a)) == 64


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("LATENT_TRAJ_THREADS", "3")
    monkeypatch.setenv("LATENT_TRAJ_LOG_LEVEL", "debug  # verbose")
    settings = Settings(_env_file=None)
    assert settings.threads == 3
    assert settings.log_level == "DEBUG"
