import hashlib
import json
import os
from pathlib import Path
from typing import Any

import pandas as pd


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write text to a temporary sibling file and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(path.name + ".tmp")
    with open(tmp_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    os.replace(tmp_path, path)
    return path


def config_hash(config: Any) -> str:
    """sha256 of the canonical JSON form of a config (pydantic model or plain data)."""
    if hasattr(config, "model_dump"):
        config = config.model_dump(mode="json")
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def artifact_header(config_sha256: str, seed: int) -> str:
    return f"# config_sha256={config_sha256} seed={seed}\n"


def write_csv_report(
    path: str | Path, frame: pd.DataFrame, config_sha256: str, seed: int
) -> Path:
    """Write a CSV report preceded by the config hash / seed comment line."""
    body = frame.to_csv(index=False, float_format="%.10g", lineterminator="\n")
    return atomic_write_text(path, artifact_header(config_sha256, seed) + body)
