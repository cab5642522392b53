from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .features import (HOUR_PERIOD, WEEKDAY_PERIOD, ScalerParams, cyclical_encode, minmax_apply,
                       minmax_fit)
from .series import LoadSeries

LOOK_BACK = 24
HORIZONS = (12, 24)
FEATURE_SETS = (5, 7)
SPLIT = (0.7, 0.2, 0.1)
PARTITIONS = ("train", "val", "test")

BASE_FEATURES = ["load", "sin_hour", "cos_hour", "sin_weekday", "cos_weekday"]
WEATHER_FEATURES = ["temp", "rhum"]


class WindowError(ValueError):
    pass


def feature_names(n_features: int) -> list[str]:
    if n_features == 5:
        return list(BASE_FEATURES)
    if n_features == 7:
        return BASE_FEATURES + WEATHER_FEATURES
    raise WindowError(f"feature set must be 5 or 7, got {n_features}")


def feature_matrix(s: LoadSeries, n_features: int) -> np.ndarray:
    """Unscaled ``[hours, F]`` matrix in the fixed column order of ``feature_names``."""
    names = feature_names(n_features)
    sh, ch = cyclical_encode(s.hours(), HOUR_PERIOD)
    sw, cw = cyclical_encode(s.weekdays(), WEEKDAY_PERIOD)
    cols = [s.load, sh, ch, sw, cw]
    for name in names[5:]:
        if name not in s.weather:
            raise WindowError(f"{s.client_id}: weather channel {name!r} required for {n_features} features")
        cols.append(s.weather[name])
    return np.column_stack(cols)


@dataclass
class WindowSet:
    inputs: np.ndarray  # [n, look_back, F]
    targets: np.ndarray  # [n, H]
    partition: np.ndarray  # [n] of "train" / "val" / "test"
    start: np.ndarray  # [n] hour index of each window's first input
    look_back: int = LOOK_BACK
    names: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def horizon(self) -> int:
        return self.targets.shape[1]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[2]

    def indices(self, part: str) -> np.ndarray:
        return np.nonzero(self.partition == part)[0]

    def arrays(self, part: str) -> tuple[np.ndarray, np.ndarray]:
        idx = self.indices(part)
        return self.inputs[idx], self.targets[idx]

    def count(self, part: str) -> int:
        return int(np.sum(self.partition == part))

    def target_hours(self, i: int) -> np.ndarray:
        first = self.start[i] + self.look_back
        return np.arange(first, first + self.horizon)

    def subset(self, keep: np.ndarray) -> "WindowSet":
        return replace(self, inputs=self.inputs[keep], targets=self.targets[keep],
                       partition=self.partition[keep], start=self.start[keep])


def make_windows(matrix: np.ndarray, look_back: int = LOOK_BACK, horizon: int = 12,
                 names: list[str] | None = None) -> WindowSet:
    """Stride-1 windows; targets are the load column (index 0) of the next ``horizon`` hours."""
    if horizon not in HORIZONS:
        raise WindowError(f"horizon must be one of {HORIZONS}, got {horizon}")
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] not in FEATURE_SETS:
        raise WindowError(f"feature matrix must be [hours, 5 or 7], got {matrix.shape}")
    hours = len(matrix)
    need = look_back + horizon
    if hours < need:
        raise WindowError(f"series of {hours} hours too short; need at least {need}")
    n = hours - need + 1
    start = np.arange(n)
    win = np.lib.stride_tricks.sliding_window_view(matrix, look_back, axis=0)  # [hours-lb+1, F, lb]
    inputs = np.ascontiguousarray(win[:n].transpose(0, 2, 1))
    tgt = np.lib.stride_tricks.sliding_window_view(matrix[look_back:, 0], horizon)
    targets = np.ascontiguousarray(tgt[:n])
    return WindowSet(inputs, targets, np.full(n, "train", dtype="<U5"), start, look_back,
                     list(names) if names else feature_names(matrix.shape[1]))


def split_counts(n: int) -> tuple[int, int, int]:
    n_train = int(round(SPLIT[0] * n))
    n_val = int(round(SPLIT[1] * n))
    return n_train, n_val, n - n_train - n_val


def chronological_split(windows: WindowSet) -> WindowSet:
    """Tag the first 70% of windows train, the next 20% val, the rest test; no shuffling."""
    n = len(windows)
    if n < 10:
        raise WindowError(f"need at least 10 windows to split, got {n}")
    n_train, n_val, _ = split_counts(n)
    order = np.argsort(windows.start, kind="stable")
    tags = np.empty(n, dtype="<U5")
    tags[order[:n_train]] = "train"
    tags[order[n_train:n_train + n_val]] = "val"
    tags[order[n_train + n_val:]] = "test"
    return replace(windows, partition=tags)


def train_span(hours: int) -> int:
    """Number of leading hours treated as the training span for fitting statistics."""
    return int(round(SPLIT[0] * hours))


@dataclass
class ClientData:
    client_id: str
    series: LoadSeries
    windows: WindowSet
    scaler: ScalerParams
    train_hours: int

    @property
    def n_train(self) -> int:
        return self.windows.count("train")


def prepare_client(series: LoadSeries, horizon: int, n_features: int,
                   look_back: int = LOOK_BACK) -> ClientData:
    """Cleaned series -> scaled, windowed, chronologically split data for one client.

    The scaler is fitted on the leading 70% of hours only.
    """
    names = feature_names(n_features)
    raw = feature_matrix(series, n_features)
    span = train_span(len(series))
    scaler = minmax_fit(raw[:span], names)
    windows = chronological_split(make_windows(minmax_apply(raw, scaler), look_back, horizon, names))
    return ClientData(series.client_id, series, windows, scaler, span)


def prepare_fleet(fleet: list[LoadSeries], horizon: int, n_features: int,
                  look_back: int = LOOK_BACK) -> list[ClientData]:
    """``prepare_client`` for every series, returned in client-id order."""
    return [prepare_client(s, horizon, n_features, look_back)
            for s in sorted(fleet, key=lambda s: s.client_id)]
