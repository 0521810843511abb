from .exceptions import ContractError, DimensionError, KernelError, NonFiniteError
from .gradcheck import finite_difference_check
from .layers import LSTMWeights, dense, init_dense, init_lstm, lstm_step
from .optim import AdamState, adam_step
from .tape import ACTIVATIONS, Node, Tape, Tensor, as_tensor

__all__ = [
    "ACTIVATIONS",
    "AdamState",
    "ContractError",
    "DimensionError",
    "KernelError",
    "LSTMWeights",
    "Node",
    "NonFiniteError",
    "Tape",
    "Tensor",
    "adam_step",
    "as_tensor",
    "dense",
    "finite_difference_check",
    "init_dense",
    "init_lstm",
    "lstm_step",
]
