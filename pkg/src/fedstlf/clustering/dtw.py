"""DTW distance and DTW barycenter averaging."""
from __future__ import annotations

import numpy as np

from .. import kernels
from ..core.ops import ConfigurationError, EmptySequenceError

DEFAULT_BAND = 24
BARYCENTER_ITERS = 10


def _as_sequence(x, name: str) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    if len(x) == 0:
        raise EmptySequenceError(f"{name} is empty")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def _band_arg(n: int, m: int, band: int | None) -> int:
    if band is None:
        return -1
    if band < abs(n - m):
        raise ConfigurationError(f"band {band} cannot connect sequences of length {n} and {m}")
    return int(band)


def dtw_distance(a, b, band: int | None = None) -> float:
    """Sum of |a_i - b_j| along the cheapest warping path.

    ``band`` is a Sakoe-Chiba radius (|i - j| <= band); ``None`` is exact.
    """
    a = _as_sequence(a, "a")
    b = _as_sequence(b, "b")
    return float(kernels.dtw_distance(a, b, _band_arg(len(a), len(b), band)))


def dtw_path(a, b, band: int | None = None) -> tuple[float, np.ndarray, np.ndarray]:
    """Distance plus the optimal path as index arrays into ``a`` and ``b``."""
    a = _as_sequence(a, "a")
    b = _as_sequence(b, "b")
    d, ii, jj = kernels.dtw_path(a, b, _band_arg(len(a), len(b), band))
    return float(d), np.asarray(ii), np.asarray(jj)


def barycenter_inertia(center, members, band: int | None = None) -> float:
    return float(sum(dtw_distance(center, m, band) for m in members))


def dtw_barycenter(members, init=None, iters: int = BARYCENTER_ITERS, band: int | None = None,
                   history: list | None = None) -> np.ndarray:
    """DTW barycenter averaging with a per-point median update.

    Each round aligns every member to the current center, collects the
    member values mapped onto each center point and takes their median.
    Under the absolute-difference DTW cost the median is the minimiser
    for fixed alignments, so total distance to the members never rises.
    ``history`` (if given) receives the total distance after every round,
    starting with the initial center.
    """
    members = [_as_sequence(m, "member") for m in members]
    if not members:
        raise EmptySequenceError("dtw_barycenter needs at least one member")
    if iters < 1:
        raise ConfigurationError("iters must be >= 1")
    center = members[0].copy() if init is None else _as_sequence(init, "init").copy()
    L = len(center)
    current = barycenter_inertia(center, members, band)
    if history is not None:
        history.append(current)
    for _ in range(iters):
        buckets: list[list[float]] = [[] for _ in range(L)]
        for m in members:
            _, ii, jj = dtw_path(center, m, band)
            for i, j in zip(ii, jj):
                buckets[i].append(m[j])
        proposal = np.array([np.median(v) for v in buckets])
        score = barycenter_inertia(proposal, members, band)
        if score > current:  # guard against round-off; never taken in exact arithmetic
            break
        done = np.array_equal(proposal, center)
        center, current = proposal, score
        if history is not None:
            history.append(current)
        if done:
            break
    return center
