"""Tensor carrier and the computation tape used for reverse-mode differentiation."""
from __future__ import annotations

import threading
from typing import Callable, Sequence

import numpy as np

DTYPE = np.float64

_local = threading.local()


class ContractError(RuntimeError):
    """Raised when an engine call violates its contract (e.g. non-scalar loss)."""


class DimensionError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=DTYPE)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"


class _Node:
    __slots__ = ("inputs", "output", "backward")

    def __init__(self, inputs, output, backward):
        self.inputs = inputs
        self.output = output
        self.backward = backward


class Tape:
    """Records primitive ops in execution order.

    Use as a context manager; ops executed inside the block whose inputs
    require gradients are appended to this tape.
    """

    def __init__(self):
        self.nodes: list[_Node] = []
        self._prev = None

    def __enter__(self) -> "Tape":
        self._prev = getattr(_local, "tape", None)
        _local.tape = self
        return self

    def __exit__(self, *exc) -> None:
        _local.tape = self._prev
        self._prev = None

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, inputs: Sequence[Tensor], output: Tensor,
               backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]) -> None:
        self.nodes.append(_Node(tuple(inputs), output, backward))

    def backward(self, loss: Tensor) -> None:
        backprop(self, loss)


def current_tape() -> Tape | None:
    return getattr(_local, "tape", None)


def track(inputs: Sequence[Tensor], output: Tensor, backward) -> Tensor:
    """Attach `output` to the active tape when any input needs a gradient."""
    tape = current_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        output.requires_grad = True
        tape.record(inputs, output, backward)
    return output


def backprop(tape: Tape, loss: Tensor) -> None:
    """Reverse sweep over `tape`, leaving `.grad` on every tensor that needs one.

    Gradients are reset before the sweep, so parameters reused across
    steps never accumulate stale values.
    """
    if loss.data.size != 1:
        raise ContractError(f"backprop needs a scalar loss, got shape {loss.shape}")
    for node in tape.nodes:
        node.output.grad = None
        for t in node.inputs:
            t.grad = None
    loss.grad = np.ones_like(loss.data)
    for node in reversed(tape.nodes):
        g = node.output.grad
        if g is None:
            continue
        in_grads = node.backward(g)
        for t, gi in zip(node.inputs, in_grads):
            if gi is None or not t.requires_grad:
                continue
            if t.grad is None:
                t.grad = np.array(gi, dtype=DTYPE, copy=True)
            else:
                t.grad += gi
