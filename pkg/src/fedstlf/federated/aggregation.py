from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..models.params import ParameterSet

AGGREGATIONS = ("data_weighted", "uniform")


class AggregationError(ValueError):
    pass


@dataclass
class ClientUpdate:
    client_id: str
    params: ParameterSet
    n_samples: int
    seconds_per_epoch: float = 0.0

    def __post_init__(self):
        if self.n_samples <= 0:
            raise ValueError(f"{self.client_id}: n_samples must be positive, got {self.n_samples}")


def _check_manifests(updates: list[ClientUpdate]) -> None:
    ref = updates[0].params.manifest()
    for u in updates[1:]:
        mine = u.params.manifest()
        for i, want in enumerate(ref):
            got = mine[i] if i < len(mine) else None
            if got != want:
                raise AggregationError(
                    f"client {u.client_id}: layer {want[0]!r} {want[1]} does not match {got}")
        if len(mine) > len(ref):
            raise AggregationError(f"client {u.client_id}: unexpected extra layer {mine[len(ref)][0]!r}")


def aggregation_weights(updates: list[ClientUpdate], mode: str) -> np.ndarray:
    if mode == "data_weighted":
        n = np.array([u.n_samples for u in updates], dtype=np.float64)
        return n / n.sum()
    if mode == "uniform":
        return np.full(len(updates), 1.0 / len(updates))
    raise AggregationError(f"unknown aggregation mode {mode!r}; choose from {AGGREGATIONS}")


def aggregate(updates: list[ClientUpdate], mode: str = "data_weighted") -> ParameterSet:
    """Weighted element-wise mean of client parameter sets.

    Updates are reduced in client-id order, as the first update plus the
    weighted deviations of the others from it. Mathematically this is the
    plain weighted mean; numerically it returns identical inputs unchanged
    and makes the result independent of the order updates arrive in.
    """
    if not updates:
        raise AggregationError("nothing to aggregate")
    ups = sorted(updates, key=lambda u: u.client_id)
    _check_manifests(ups)
    c = aggregation_weights(ups, mode)
    arrays = [u.params.arrays() for u in ups]
    out = []
    for idx, (name, base) in enumerate(ups[0].params):
        acc = base.copy()
        for i in range(1, len(ups)):
            acc += c[i] * (arrays[i][idx] - base)
        out.append((name, acc))
    return ParameterSet(out)
