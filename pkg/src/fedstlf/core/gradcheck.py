from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tape, Tensor, backprop

# gradients below this magnitude are compared absolutely; central
# differences at h=1e-5 carry roughly 1e-11 of round-off on O(1) losses
GRAD_FLOOR = 1e-6


def finite_difference_check(model_forward: Callable[[], Tensor], params: Sequence[Tensor],
                            h: float = 1e-5, n_coords: int = 64,
                            rng: np.random.Generator | None = None) -> float:
    """Max relative error between backprop and central differences.

    ``model_forward`` must be deterministic (reseed any dropout stream
    inside it) and return a scalar loss built from ``params``. At least
    ``n_coords`` coordinates are sampled across all parameters.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    rng = rng if rng is not None else np.random.default_rng(0)
    for p in params:
        p.requires_grad = True
    with Tape() as tape:
        loss = model_forward()
    backprop(tape, loss)
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    sizes = np.array([p.data.size for p in params])
    total = int(sizes.sum())
    flat_ids = rng.choice(total, size=min(n_coords, total), replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    worst = 0.0
    for fid in np.sort(flat_ids):
        which = int(np.searchsorted(offsets, fid, side="right") - 1)
        local = int(fid - offsets[which])
        arr = params[which].data.reshape(-1)
        saved = arr[local]
        arr[local] = saved + h
        f_plus = model_forward().item()
        arr[local] = saved - h
        f_minus = model_forward().item()
        arr[local] = saved
        numeric = (f_plus - f_minus) / (2.0 * h)
        a = analytic[which].reshape(-1)[local]
        err = abs(a - numeric) / max(abs(a), abs(numeric), GRAD_FLOOR)
        worst = max(worst, err)
    return worst
