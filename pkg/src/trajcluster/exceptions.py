from typing import Any


class ClusteringError(Exception):
    """Raised for invalid distance matrices, cluster counts or neighbor queries"""

    def __init__(self, message: str, data: Any = None):
        self.message = message
        self.invalid_data = data
        super().__init__(self.message)
