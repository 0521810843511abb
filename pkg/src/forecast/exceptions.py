from typing import Any


class ForecastError(Exception):
    """Base exception for prediction and evaluation"""

    def __init__(self, message: str, data: Any = None):
        self.message = message
        self.invalid_data = data
        super().__init__(self.message)


class MetricError(ForecastError):
    """Raised when a metric has nothing to score"""

    pass
