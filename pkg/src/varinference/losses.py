"""Masked likelihood terms and the analytic Gaussian KL, as scalar tape nodes.

Masks are float arrays of 0/1. Values behind a zero mask are replaced by 0 before they
touch the tape, so every term is exactly invariant to them.
"""

import math

import numpy as np

from src.diffkernel.exceptions import DimensionError
from src.diffkernel.tape import Node, Tape
from src.genmodel.networks import GaussianParams

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
PROB_FLOOR = 1e-12


def kl_diag_gaussian(tape: Tape, q: GaussianParams, p: GaussianParams) -> Node:
    """Sum over cells of KL[N(mq, sq^2) || N(mp, sp^2)]."""
    if q.mean.shape != p.mean.shape or q.sd is None or p.sd is None:
        raise DimensionError(
            "KL needs two probabilistic blocks of equal shape",
            {"q": q.mean.shape, "p": p.mean.shape},
        )
    log_ratio = tape.sub(tape.log(p.sd), tape.log(q.sd))
    spread = tape.add(tape.square(q.sd), tape.square(tape.sub(q.mean, p.mean)))
    quadratic = tape.div(spread, tape.scale(tape.square(p.sd), 2.0))
    cells = q.mean.value.size
    return tape.shift(tape.sum(tape.add(log_ratio, quadratic)), -0.5 * cells)


def masked_gaussian_nll(
    tape: Tape, x: np.ndarray, mask: np.ndarray, mean: Node, sd: Node | None
) -> Node:
    """Sum over observed cells of 0.5 ln(2 pi sd^2) + (x - mean)^2 / (2 sd^2); sd None is 1."""
    mask = np.asarray(mask, dtype=float)
    if mask.shape != mean.shape or np.shape(x) != mean.shape:
        raise DimensionError(
            "values, mask and mean must share one shape",
            {"x": np.shape(x), "mask": mask.shape, "mean": mean.shape},
        )
    x = np.where(mask > 0.0, x, 0.0)
    residual = tape.sub(tape.constant(x), mean)
    if sd is None:
        cells = tape.scale(tape.square(residual), 0.5)
    else:
        standardized = tape.div(residual, sd)
        cells = tape.add(tape.log(sd), tape.scale(tape.square(standardized), 0.5))
    observed = tape.sum(tape.mul(cells, tape.constant(mask)))
    return tape.shift(observed, HALF_LOG_2PI * float(mask.sum()))


def masked_categorical_ce(
    tape: Tape, labels: np.ndarray, mask: np.ndarray, probs: Node
) -> Node:
    """Sum over observed rows of -ln p[true class], with p floored at 1e-12."""
    mask = np.asarray(mask, dtype=float)
    rows = probs.shape[0]
    if mask.shape != (rows,) or np.shape(labels) != (rows,):
        raise DimensionError(
            "labels and mask must have one entry per probability row",
            {"labels": np.shape(labels), "mask": mask.shape, "probs": probs.shape},
        )
    labels = np.where(mask > 0.0, labels, 0).astype(np.int64)
    picked = tape.pick(probs, np.arange(rows), labels)
    log_p = tape.log(picked, floor=PROB_FLOOR)
    return tape.scale(tape.sum(tape.mul(log_p, tape.constant(mask))), -1.0)
