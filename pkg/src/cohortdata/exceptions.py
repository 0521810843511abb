from typing import Any


class CohortError(Exception):
    """Base exception for cohort data errors"""

    def __init__(self, message: str, data: Any = None):
        self.message = message
        self.invalid_data = data
        super().__init__(self.message)


class CohortParseError(CohortError):
    """Raised when a cohort file or record violates the record format"""

    def __init__(
        self,
        message: str,
        patient_id: str | None = None,
        row: int | None = None,
        data: Any = None,
    ):
        self.patient_id = patient_id
        self.row = row
        location = []
        if patient_id is not None:
            location.append(f"patient {patient_id}")
        if row is not None:
            location.append(f"row {row}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message, data)


class SplitError(CohortError):
    """Raised when a cohort cannot be split as requested"""

    pass
