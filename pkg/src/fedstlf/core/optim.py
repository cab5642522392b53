from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NumericError(FloatingPointError):
    pass


@dataclass
class AdamState:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: list[np.ndarray] = field(default_factory=list)
    second_moment: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_arrays(cls, arrays, **hyper) -> "AdamState":
        return cls(first_moment=[np.zeros_like(a) for a in arrays],
                   second_moment=[np.zeros_like(a) for a in arrays], **hyper)

    @property
    def size(self) -> int:
        return sum(m.size for m in self.first_moment)


def adam_update(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState) -> None:
    """Bias-corrected Adam step, in place on ``params`` and ``state``.

    A non-finite gradient aborts before anything is modified.
    """
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ValueError(
            f"adam_update: {len(params)} params, {len(grads)} grads, "
            f"{len(state.first_moment)} moment slots")
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise ValueError(f"adam_update: param {i} shape {p.shape} vs grad {g.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in parameter slot {i}")

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1 ** state.step
    corr2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + state.epsilon)
