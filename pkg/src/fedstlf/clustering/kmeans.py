from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core.ops import ConfigurationError
from ..data.series import LoadSeries
from ..data.windows import train_span
from .dtw import BARYCENTER_ITERS, DEFAULT_BAND, dtw_barycenter, dtw_distance

WEEK = 168
MIN_WEEKS = 4


class InsufficientHistoryError(ValueError):
    pass


@dataclass
class ClusterAssignment:
    k: int
    assignment: dict[str, int]
    centroids: list[np.ndarray]
    inertia: float
    history: list[float] = field(default_factory=list)
    rounds: int = 0

    def members(self, cluster: int) -> list[str]:
        return [cid for cid, c in self.assignment.items() if c == cluster]

    def sizes(self) -> list[int]:
        return [len(self.members(c)) for c in range(self.k)]


def client_profile_for_clustering(s: LoadSeries, train_hours: int | None = None) -> np.ndarray:
    """Mean load per hour-of-week (Monday 00h first) over the training span, min-max normalised.

    A constant profile normalises to zeros.
    """
    span = train_span(len(s)) if train_hours is None else int(train_hours)
    if span < MIN_WEEKS * WEEK:
        raise InsufficientHistoryError(
            f"{s.client_id}: clustering profile needs {MIN_WEEKS} full weeks of training data, "
            f"got {span} hours")
    load = s.load[:span]
    if np.isnan(load).any():
        raise ValueError(f"{s.client_id}: clean the series before profiling")
    slot = s.weekdays()[:span] * 24 + s.hours()[:span]
    profile = np.bincount(slot, weights=load, minlength=WEEK) / np.bincount(slot, minlength=WEEK)
    lo, hi = profile.min(), profile.max()
    if hi <= lo:
        return np.zeros(WEEK)
    return (profile - lo) / (hi - lo)


def _kmeanspp(X: list[np.ndarray], k: int, rng: np.random.Generator, band) -> list[int]:
    n = len(X)
    chosen = [int(rng.integers(n))]
    nearest = np.array([dtw_distance(X[chosen[0]], x, band) for x in X])
    while len(chosen) < k:
        w = nearest ** 2
        w[chosen] = 0.0
        if w.sum() > 0:
            pick = int(rng.choice(n, p=w / w.sum()))
        else:
            rest = [i for i in range(n) if i not in chosen]
            pick = int(rest[rng.integers(len(rest))])
        chosen.append(pick)
        nearest = np.minimum(nearest, [dtw_distance(X[pick], x, band) for x in X])
    return chosen


N_INIT = 5


def kmeans_dtw(profiles: dict[str, np.ndarray], k: int = 6, seed: int = 0, max_rounds: int = 20,
               band: int | None = DEFAULT_BAND, barycenter_iters: int = BARYCENTER_ITERS,
               n_init: int = N_INIT) -> ClusterAssignment:
    """k-means with DTW assignment and DTW-barycenter centroids.

    Clients are processed in sorted id order so the result depends only
    on the profiles and the seed. ``n_init`` seeded restarts are run and
    the one with the lowest inertia kept. ``history`` holds the inertia
    after every assignment and every centroid update of that run.
    """
    ids = sorted(profiles)
    n = len(ids)
    if k < 1:
        raise ConfigurationError(f"k must be positive, got {k}")
    if n < k:
        raise ConfigurationError(f"cannot form {k} clusters from {n} clients")
    if n_init < 1:
        raise ConfigurationError(f"n_init must be positive, got {n_init}")
    X = [np.asarray(profiles[c], dtype=np.float64) for c in ids]
    best = None
    for rng in (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_init)):
        run = _lloyd(X, k, rng, max_rounds, band, barycenter_iters)
        if best is None or run[2] < best[2]:
            best = run
    labels, centroids, inertia, history, rounds = best
    return ClusterAssignment(k, {cid: int(labels[i]) for i, cid in enumerate(ids)},
                             centroids, inertia, history, rounds)


def _lloyd(X, k, rng, max_rounds, band, barycenter_iters):
    n = len(X)
    centroids = [X[i].copy() for i in _kmeanspp(X, k, rng, band)]
    labels = None
    history: list[float] = []
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        dist = np.array([[dtw_distance(x, c, band) for c in centroids] for x in X])
        new = np.argmin(dist, axis=1)
        own = dist[np.arange(n), new]
        for c in range(k):
            if np.any(new == c):
                continue
            # reseed an empty cluster with the profile farthest from its centroid,
            # taken only from clusters that keep at least one member
            sizes = np.bincount(new, minlength=k)
            movable = np.nonzero(sizes[new] > 1)[0]
            far = int(movable[np.argmax(own[movable])])
            new[far] = c
            own[far] = 0.0
            centroids[c] = X[far].copy()
        history.append(float(own.sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = [X[i] for i in np.nonzero(labels == c)[0]]
            centroids[c] = dtw_barycenter(members, centroids[c], barycenter_iters, band)
        history.append(float(sum(dtw_distance(X[i], centroids[labels[i]], band) for i in range(n))))
    labels = new
    inertia = float(sum(dtw_distance(X[i], centroids[labels[i]], band) for i in range(n)))
    return labels, centroids, inertia, history, rounds


def cluster_purity(assignment: ClusterAssignment, labels: dict[str, str]) -> float:
    """Fraction of clients whose cluster's majority label matches their own."""
    hit = 0
    for c in range(assignment.k):
        names = [labels[cid] for cid in assignment.members(c)]
        if names:
            hit += max(names.count(v) for v in set(names))
    return hit / len(assignment.assignment)


def write_assignment_csv(assignment: ClusterAssignment, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["client_id", "cluster"])
        for cid in sorted(assignment.assignment):
            w.writerow([cid, assignment.assignment[cid]])


def read_assignment_csv(path) -> dict[str, int]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return {r["client_id"]: int(r["cluster"]) for r in rows}


def write_centroid_csvs(assignment: ClusterAssignment, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for c, centroid in enumerate(assignment.centroids):
        p = directory / f"centroid_{c}.csv"
        with p.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["hour_of_week", "value"])
            for h, v in enumerate(centroid):
                w.writerow([h, repr(float(v))])
        paths.append(p)
    return paths
