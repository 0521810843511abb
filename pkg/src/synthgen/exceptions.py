from typing import Any


class SimulationError(Exception):
    """Base exception for the cohort simulator"""

    def __init__(self, message: str, data: Any = None):
        self.message = message
        self.invalid_data = data
        super().__init__(self.message)


class RuleError(SimulationError):
    """Raised when a concept rule file is malformed"""

    pass
