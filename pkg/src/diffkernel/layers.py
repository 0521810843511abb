"""Dense and gated recurrent layers built from tape primitives.

Weights live in a flat ``dict[str, ndarray]`` keyed ``<prefix>.<name>``; the layer
functions look them up on the tape so every network shares one parameter store.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError
from .tape import Node, Tape

Parameters = dict[str, np.ndarray]


def init_dense(
    params: Parameters,
    prefix: str,
    n_in: int,
    n_out: int,
    rng: np.random.Generator,
    zero: bool = False,
) -> None:
    """Glorot-uniform weights and zero bias; `zero=True` zero-initializes both."""
    if zero:
        params[f"{prefix}.W"] = np.zeros((n_out, n_in))
    else:
        limit = np.sqrt(6.0 / (n_in + n_out))
        params[f"{prefix}.W"] = rng.uniform(-limit, limit, size=(n_out, n_in))
    params[f"{prefix}.b"] = np.zeros(n_out)


def dense(tape: Tape, prefix: str, x: Node, activation: str | None = None) -> Node:
    out = tape.affine(tape.param(f"{prefix}.W"), tape.param(f"{prefix}.b"), x)
    if activation is not None:
        out = tape.activation(activation, out)
    return out


@dataclass
class LSTMWeights:
    """Gate weights stacked in the order input, forget, candidate, output."""

    W_x: Node  # noqa: N815
    W_h: Node  # noqa: N815
    b: Node

    @property
    def hidden(self) -> int:
        return self.W_h.value.shape[1]

    @classmethod
    def bind(cls, tape: Tape, prefix: str) -> "LSTMWeights":
        return cls(
            W_x=tape.param(f"{prefix}.W_x"),
            W_h=tape.param(f"{prefix}.W_h"),
            b=tape.param(f"{prefix}.b"),
        )


def init_lstm(
    params: Parameters,
    prefix: str,
    n_in: int,
    hidden: int,
    rng: np.random.Generator,
    forget_bias: float = 1.0,
) -> None:
    limit_x = np.sqrt(6.0 / (n_in + hidden))
    limit_h = np.sqrt(6.0 / (2 * hidden))
    params[f"{prefix}.W_x"] = rng.uniform(-limit_x, limit_x, size=(4 * hidden, n_in))
    params[f"{prefix}.W_h"] = rng.uniform(-limit_h, limit_h, size=(4 * hidden, hidden))
    bias = np.zeros(4 * hidden)
    bias[hidden : 2 * hidden] = forget_bias
    params[f"{prefix}.b"] = bias


def lstm_step(
    tape: Tape, weights: LSTMWeights, x_t: Node, h_prev: Node, c_prev: Node
) -> tuple[Node, Node]:
    """One gated update: c = f*c_prev + i*g, h = o*tanh(c)."""
    hidden = weights.hidden
    if weights.W_h.value.shape != (4 * hidden, hidden) or h_prev.shape != (hidden,):
        raise DimensionError(
            "lstm_step: gate weights do not conform to the hidden width",
            {"W_h": weights.W_h.value.shape, "h_prev": h_prev.shape},
        )
    if c_prev.shape != (hidden,):
        raise DimensionError(
            "lstm_step: cell state does not match the hidden width",
            {"c_prev": c_prev.shape, "hidden": hidden},
        )
    gates = tape.add(
        tape.affine(weights.W_x, weights.b, x_t),
        tape.affine(weights.W_h, None, h_prev),
    )
    i = tape.activation("sigmoid", tape.columns(gates, slice(0, hidden)))
    f = tape.activation("sigmoid", tape.columns(gates, slice(hidden, 2 * hidden)))
    g = tape.activation("tanh", tape.columns(gates, slice(2 * hidden, 3 * hidden)))
    o = tape.activation("sigmoid", tape.columns(gates, slice(3 * hidden, 4 * hidden)))
    c = tape.add(tape.mul(f, c_prev), tape.mul(i, g))
    h = tape.mul(o, tape.activation("tanh", c))
    return h, c
