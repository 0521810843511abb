"""Seed discipline: every stochastic stage draws from its own derived stream."""

import hashlib

import numpy as np


def derive_seed(global_seed: int, stage: str, *keys: int) -> int:
    """Derive an independent 63-bit seed from the global seed and a stage name."""
    payload = ":".join([str(int(global_seed)), stage, *(str(int(k)) for k in keys)])
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def patient_rng(stage_seed: int, *keys: int) -> np.random.Generator:
    """Generator for one (stage, patient, ...) cell, independent of scheduling."""
    return np.random.default_rng([int(stage_seed), *(int(k) for k in keys)])
