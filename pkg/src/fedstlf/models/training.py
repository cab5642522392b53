from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..core import AdamState, Tape, adam_update, backprop, mse_loss
from .architectures import Forecaster, SpecMismatchError
from .params import ParameterSet

BATCH_SIZE = 32
PATIENCE = 10


class EmptyPartitionError(ValueError):
    pass


@dataclass
class TrainResult:
    params: ParameterSet
    history: list[dict] = field(default_factory=list)
    seconds_per_epoch: list[float] = field(default_factory=list)
    best_epoch: int | None = None

    @property
    def mean_seconds_per_epoch(self) -> float:
        return float(np.mean(self.seconds_per_epoch)) if self.seconds_per_epoch else 0.0


def ensure_optimizer(model: Forecaster, learning_rate: float = 1e-3) -> AdamState:
    if model.optimizer is None:
        model.optimizer = AdamState.for_arrays([t.data for t in model.trainable()],
                                               learning_rate=learning_rate)
    return model.optimizer


def train_step(model: Forecaster, x: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> float:
    model.zero_grad()
    with Tape() as tape:
        loss = mse_loss(model.forward(x, training=True, rng=rng), y)
    backprop(tape, loss)
    adam_update([t.data for t in model.trainable()], model.gradients(), model.optimizer)
    return loss.item()


def evaluate_loss(model: Forecaster, x: np.ndarray, y: np.ndarray) -> float:
    if len(x) == 0:
        return float("nan")
    pred = model.predict(x)
    return float(np.mean((pred - y) ** 2))


def train_epochs(model: Forecaster, windows, n_epochs: int, batch_size: int = BATCH_SIZE,
                 early_stopping: int | None = None, rng: np.random.Generator | None = None,
                 monitor: Callable[[Forecaster], float] | None = None,
                 learning_rate: float = 1e-3) -> TrainResult:
    """Mini-batch MSE training with Adam, batches in chronological order.

    ``early_stopping`` is the patience in epochs (``None`` disables it);
    when enabled the weights of the best validation epoch are restored.
    ``monitor`` overrides the validation-loss measurement.
    """
    x_tr, y_tr = windows.arrays("train")
    if len(x_tr) == 0:
        raise EmptyPartitionError("train partition is empty")
    if y_tr.shape[1] != model.spec.horizon or x_tr.shape[2] != model.spec.n_features:
        raise SpecMismatchError(
            f"windows {x_tr.shape}->{y_tr.shape} do not fit model "
            f"(features={model.spec.n_features}, horizon={model.spec.horizon})")
    x_val, y_val = windows.arrays("val")
    if rng is None:
        rng = np.random.default_rng(model.spec.seed)
    if monitor is None:
        def monitor(m):
            return evaluate_loss(m, x_val, y_val)

    ensure_optimizer(model, learning_rate)
    result = TrainResult(params=model.get_parameters())
    best_val, best_params, stale = np.inf, None, 0
    for epoch in range(n_epochs):
        t0 = time.perf_counter()
        losses = [train_step(model, x_tr[i:i + batch_size], y_tr[i:i + batch_size], rng)
                  for i in range(0, len(x_tr), batch_size)]
        result.seconds_per_epoch.append(time.perf_counter() - t0)
        val = monitor(model) if (early_stopping is not None or len(x_val)) else float("nan")
        result.history.append({"epoch": epoch + 1, "train_loss": float(np.mean(losses)),
                               "val_loss": val})
        if early_stopping is None:
            continue
        if val < best_val:
            best_val, best_params, stale = val, model.get_parameters(), 0
            result.best_epoch = epoch + 1
        else:
            stale += 1
            if stale >= early_stopping:
                break
    if early_stopping is not None and best_params is not None:
        model.set_parameters(best_params)
    result.params = model.get_parameters()
    return result
