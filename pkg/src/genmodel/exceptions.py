from typing import Any


class ModelError(Exception):
    """Base exception for model construction and persistence"""

    def __init__(self, message: str, data: Any = None):
        self.message = message
        self.invalid_data = data
        super().__init__(self.message)


class PartitionError(ModelError):
    """Raised when the guidance partition is inconsistent with the schema"""

    pass


class CheckpointError(ModelError):
    """Raised when a checkpoint cannot be read or does not match its schema"""

    pass
