from collections.abc import Callable

import numpy as np
from loguru import logger

from .exceptions import ContractError, NonFiniteError
from .tape import Node, Tape

Objective = Callable[[Tape], Node]


def _evaluate(objective: Objective, params: dict[str, np.ndarray]) -> float:
    value = objective(Tape(params)).item()
    if not np.isfinite(value):
        raise NonFiniteError("Objective is not finite", {"value": value})
    return value


def finite_difference_check(
    objective: Objective,
    params: dict[str, np.ndarray],
    h: float = 1e-5,
    max_entries_per_param: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Compare tape gradients with central differences.

    `objective` builds a scalar on the tape it is given (reading parameters through
    ``tape.param``). Returns max |g_ad - g_fd| / max(1, |g_fd|) over the checked entries.
    With `max_entries_per_param` only a random subset of each parameter is perturbed.
    """
    if not 1e-6 <= h <= 1e-3:
        raise ContractError("finite difference step must lie in [1e-6, 1e-3]", {"h": h})

    tape = Tape(params)
    loss = objective(tape)
    analytic = tape.backward(loss)

    worst = 0.0
    checked = 0
    for name, value in params.items():
        flat_indices = np.arange(value.size)
        if max_entries_per_param is not None and value.size > max_entries_per_param:
            rng = rng if rng is not None else np.random.default_rng(0)
            flat_indices = np.sort(
                rng.choice(value.size, max_entries_per_param, replace=False)
            )
        for flat in flat_indices:
            idx = np.unravel_index(flat, value.shape)
            plus = dict(params)
            minus = dict(params)
            plus[name] = value.copy()
            minus[name] = value.copy()
            plus[name][idx] += h
            minus[name][idx] -= h
            numeric = (_evaluate(objective, plus) - _evaluate(objective, minus)) / (2 * h)
            error = abs(analytic[name][idx] - numeric) / max(1.0, abs(numeric))
            worst = max(worst, float(error))
            checked += 1

    logger.debug(f"Gradient check over {checked} entries: max relative error {worst:.3e}")
    return worst
