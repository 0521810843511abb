from typing import Any


class KernelError(Exception):
    """Base exception for the differentiable kernel"""

    def __init__(self, message: str, data: Any = None):
        self.message = message
        self.invalid_data = data
        super().__init__(self.message)


class DimensionError(KernelError):
    """Raised when operand shapes do not conform"""

    pass


class ContractError(KernelError):
    """Raised when an operation's precondition is violated"""

    pass


class NonFiniteError(KernelError):
    """Raised when a NaN or Inf reaches a node boundary"""

    pass
