from pathlib import Path
from typing import Any

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveInt,
    ValidationError,
    field_validator,
    model_validator,
)
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.forecast.evaluation import EvalConfig
from src.genmodel.config import ModelConfig
from src.synthgen.simulator import SimConfig
from src.trajcluster.medoids import ClusterConfig
from src.varinference.objective import TrainConfig


class ConfigError(Exception):
    """Invalid run configuration, located by file and line where possible"""

    def __init__(
        self, message: str, path: str | Path | None = None, line: int | None = None
    ):
        self.message = message
        self.path = None if path is None else str(path)
        self.line = line
        location = self.path or "<config>"
        if line is not None:
            location = f"{location}:{line}"
        super().__init__(f"{location}: {message}")


class Settings(BaseSettings):
    """Process-level settings loaded from LATENT_TRAJ_* environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="LATENT_TRAJ_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        validate_default=True,
        extra="ignore",
    )

    log_level: str = "INFO"
    threads: PositiveInt = 1
    seed: int = 0

    @field_validator("log_level", mode="before")
    def clean_level(cls, v):  # noqa: N805
        if isinstance(v, str):
            # Remove any comments and whitespace
            return v.split("#")[0].strip().upper()
        return v


class RunConfig(BaseModel):
    """One file configures a whole simulate -> train -> evaluate -> cluster pipeline."""

    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    min_visits: PositiveInt = 5
    split: tuple[float, float, float] = (0.7, 0.15, 0.15)
    sim: SimConfig | None = None
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    cluster: ClusterConfig = Field(default_factory=ClusterConfig)

    @model_validator(mode="after")
    def check_split(self) -> "RunConfig":
        if min(self.split) <= 0 or abs(sum(self.split) - 1.0) > 1e-9:
            raise ValueError("split must be three positive fractions summing to 1")
        return self


def _line_of(node: yaml.Node | None, loc: tuple[Any, ...]) -> int | None:
    """1-based line of the YAML node addressed by a pydantic error location."""
    line = None if node is None else node.start_mark.line + 1
    for part in loc:
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                if key.value == str(part):
                    line = key.start_mark.line + 1
                    node = value
                    break
            else:
                return line
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int):
            if part >= len(node.value):
                return line
            node = node.value[part]
            line = node.start_mark.line + 1
        else:
            return line
    return line


def load_run_config(path: str | Path) -> RunConfig:
    """Parse a YAML (or JSON) run configuration; errors name the offending line."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}", path) from e
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = None if mark is None else mark.line + 1
        raise ConfigError(f"invalid YAML: {getattr(e, 'problem', e)}", path, line) from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", path, 1)

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        loc = tuple(first["loc"])
        dotted = ".".join(str(p) for p in loc) or "<root>"
        raise ConfigError(f"{dotted}: {first['msg']}", path, _line_of(root, loc)) from e


settings = Settings()
