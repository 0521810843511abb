"""
Adam with bias correction.

    m_t = b1 * m_{t-1} + (1 - b1) * g
    v_t = b2 * v_{t-1} + (1 - b2) * g**2
    p_t = p_{t-1} - lr * m_hat / (sqrt(v_hat) + eps)

where m_hat = m_t / (1 - b1**t) and v_hat = v_t / (1 - b2**t).
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, NonFiniteError

Parameters = dict[str, np.ndarray]


@dataclass
class AdamState:
    step: int = 0
    m: Parameters = field(default_factory=dict)
    v: Parameters = field(default_factory=dict)
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_parameters(cls, params: Parameters, **hyper) -> "AdamState":
        return cls(
            m={k: np.zeros_like(v) for k, v in params.items()},
            v={k: np.zeros_like(v) for k, v in params.items()},
            **hyper,
        )


def adam_step(
    state: AdamState, params: Parameters, grads: Parameters
) -> tuple[Parameters, AdamState]:
    """Return updated parameters and state; inputs are left untouched."""
    for name, grad in grads.items():
        if name not in params or params[name].shape != grad.shape:
            raise DimensionError(
                f"Gradient for '{name}' does not match its parameter",
                {"name": name, "grad": grad.shape},
            )
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError(
                f"Non-finite gradient for '{name}', update rejected", {"name": name}
            )

    step = state.step + 1
    correction1 = 1.0 - state.beta1**step
    correction2 = 1.0 - state.beta2**step
    new_params: Parameters = {}
    new_m: Parameters = {}
    new_v: Parameters = {}
    for name, value in params.items():
        grad = grads.get(name)
        m = state.m.get(name, np.zeros_like(value))
        v = state.v.get(name, np.zeros_like(value))
        if grad is None:
            new_params[name], new_m[name], new_v[name] = value, m, v
            continue
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        new_params[name] = value - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        new_m[name], new_v[name] = m, v

    new_state = AdamState(
        step=step,
        m=new_m,
        v=new_v,
        lr=state.lr,
        beta1=state.beta1,
        beta2=state.beta2,
        eps=state.eps,
    )
    return new_params, new_state
