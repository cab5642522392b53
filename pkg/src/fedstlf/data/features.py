from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .series import LoadSeries

HOUR_PERIOD = 24
WEEKDAY_PERIOD = 7
MIN_FFT_SAMPLES = 48


class UndefinedCorrelationError(ValueError):
    pass


class DegenerateFeatureError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


def pearson_correlation(x, y) -> float:
    """Sample Pearson r via the sum formula, evaluated on mean-shifted data.

    Shifting leaves r unchanged and keeps the sums free of cancellation.
    When exactly one input is constant there is no linear relationship
    and 0.0 is returned.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"pearson_correlation needs equal-length 1-D inputs, got {x.shape}, {y.shape}")
    n = len(x)
    if n < 2:
        raise ValueError("pearson_correlation needs at least two samples")
    const_x, const_y = bool(np.all(x == x[0])), bool(np.all(y == y[0]))
    if const_x and const_y:
        raise UndefinedCorrelationError("both inputs are constant")
    if const_x or const_y:
        return 0.0
    x = x - x.mean()
    y = y - y.mean()
    sx, sy = x.sum(), y.sum()
    var_x = n * np.dot(x, x) - sx * sx
    var_y = n * np.dot(y, y) - sy * sy
    r = (n * np.dot(x, y) - sx * sy) / np.sqrt(var_x * var_y)
    return float(np.clip(r, -1.0, 1.0))


def calendar_candidates(s: LoadSeries) -> dict[str, np.ndarray]:
    days = s.timestamps.astype("datetime64[D]")
    months = s.timestamps.astype("datetime64[M]").astype(np.int64)
    return {
        "hour": s.hours().astype(np.float64),
        "weekday": s.weekdays().astype(np.float64),
        "month": (months % 12 + 1).astype(np.float64),
        "quarter": (months % 12 // 3 + 1).astype(np.float64),
        "year": (days.astype("datetime64[Y]").astype(np.int64) + 1970).astype(np.float64),
    }


@dataclass
class FeatureSelection:
    correlations: dict[str, float] = field(default_factory=dict)
    weather: list[str] = field(default_factory=list)
    calendar: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    @property
    def selected(self) -> list[str]:
        return self.weather + self.calendar


def _rank(load, candidates: dict[str, np.ndarray], sel: FeatureSelection, top: int) -> list[str]:
    scored = []
    for name, values in candidates.items():
        try:
            r = pearson_correlation(values, load)
        except UndefinedCorrelationError:
            sel.skipped.append(name)
            continue
        sel.correlations[name] = r
        scored.append((-abs(r), name))
    scored.sort()
    return [name for _, name in scored[:top]]


def select_features(series: LoadSeries, train_hours: int | None = None, top: int = 2) -> FeatureSelection:
    """Rank weather and calendar candidates by |r| against load on the training span."""
    stop = len(series) if train_hours is None else train_hours
    part = series.slice(0, stop)
    sel = FeatureSelection()
    sel.weather = _rank(part.load, part.weather, sel, top)
    sel.calendar = _rank(part.load, calendar_candidates(part), sel, top)
    return sel


def cyclical_encode(value, period: float) -> tuple[np.ndarray, np.ndarray]:
    angle = 2.0 * np.pi * np.asarray(value, dtype=np.float64) / period
    return np.sin(angle), np.cos(angle)


@dataclass
class ScalerParams:
    names: list[str]
    x_min: np.ndarray
    x_max: np.ndarray


def minmax_fit(train: np.ndarray, names: list[str] | None = None) -> ScalerParams:
    """Per-column min/max of a ``[n, features]`` training matrix."""
    train = np.asarray(train, dtype=np.float64)
    if train.ndim == 1:
        train = train[:, None]
    names = names or [f"f{i}" for i in range(train.shape[1])]
    return ScalerParams(list(names), train.min(axis=0), train.max(axis=0))


def _check(p: ScalerParams):
    flat = np.nonzero(p.x_max <= p.x_min)[0]
    if len(flat):
        raise DegenerateFeatureError(f"feature {p.names[flat[0]]!r} is constant on the training span")


def minmax_apply(x: np.ndarray, p: ScalerParams) -> np.ndarray:
    """Scale to [0, 1] relative to the fitted range; out-of-range values are not clipped."""
    _check(p)
    return (np.asarray(x, dtype=np.float64) - p.x_min) / (p.x_max - p.x_min)


def minmax_invert(x: np.ndarray, p: ScalerParams) -> np.ndarray:
    _check(p)
    return np.asarray(x, dtype=np.float64) * (p.x_max - p.x_min) + p.x_min


def fft_coefficients(x) -> np.ndarray:
    """Fourier coefficients of the mean-centred sequence."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) < MIN_FFT_SAMPLES:
        raise InsufficientDataError(f"need at least {MIN_FFT_SAMPLES} samples, got {len(x)}")
    return np.fft.fft(x - x.mean())


def dominant_period(x) -> float:
    """Period in samples (hours) of the strongest non-DC component."""
    coeffs = fft_coefficients(x)
    n = len(coeffs)
    mags = np.abs(coeffs[1:n // 2 + 1])
    scale = np.abs(np.asarray(x, dtype=np.float64)).max()
    if mags.max() <= 1e-9 * max(scale, 1.0) * n:
        raise InsufficientDataError("series has no periodic component (constant after centring)")
    k = int(np.argmax(mags)) + 1
    return n / k
