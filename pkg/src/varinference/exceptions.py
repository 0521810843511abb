from typing import Any


class TrainingError(Exception):
    """Base exception for objective evaluation and optimization"""

    def __init__(self, message: str, data: Any = None):
        self.message = message
        self.invalid_data = data
        super().__init__(self.message)


class EmptyCohortError(TrainingError):
    """Raised when an objective is requested over no patients"""

    pass


class TrainingDivergedError(TrainingError):
    """Raised when the loss or its gradients stop being finite.

    `last_good` is the model with the best parameters seen before the divergence.
    """

    def __init__(self, message: str, last_good: Any = None, data: Any = None):
        super().__init__(message, data)
        self.last_good = last_good
