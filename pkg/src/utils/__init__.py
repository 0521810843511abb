from loguru import logger

from .io import atomic_write_text, config_hash, write_csv_report
from .logging import setup_logging
from .parallel import ordered_map
from .seeding import derive_seed, patient_rng


def get_logger(name: str) -> logger:
    """Get a logger instance for the given name."""
    return logger.bind(name=name)


__all__ = [
    "setup_logging",
    "get_logger",
    "atomic_write_text",
    "config_hash",
    "write_csv_report",
    "ordered_map",
    "derive_seed",
    "patient_rng",
]
