"""Forecast metrics, report tables and forecast plots."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

MAPE_FLOOR = 1e-7
REGIMES = ("central", "local", "federated")
REGIME_TITLES = {"central": "Central learning", "local": "Local learning",
                 "federated": "Federated learning"}
MODEL_ORDER = ("cnn", "lstm", "transformer")
MODEL_LABELS = {"cnn": "CNN", "lstm": "LSTM", "transformer": "Transf."}
REPORT_HEADER = ["regime", "model", "horizon", "n_features", "rmse", "mae", "mape",
                 "seconds_per_epoch"]


def _pair(pred, actual) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64).ravel()
    a = np.asarray(actual, dtype=np.float64).ravel()
    if p.shape != a.shape:
        raise ValueError(f"length mismatch: {p.size} predictions vs {a.size} actuals")
    if p.size == 0:
        raise ValueError("metrics need at least one value")
    return p, a


def rmse(pred, actual) -> float:
    p, a = _pair(pred, actual)
    return float(np.sqrt(np.mean((a - p) ** 2)))


def mae(pred, actual) -> float:
    p, a = _pair(pred, actual)
    return float(np.mean(np.abs(a - p)))


def mape(pred, actual, floor: float = MAPE_FLOOR) -> float:
    """Mean absolute percentage error; |actual| is floored at ``floor``."""
    if not floor > 0:
        raise ValueError("MAPE floor must be positive")
    p, a = _pair(pred, actual)
    return float(100.0 * np.mean(np.abs((a - p) / np.maximum(np.abs(a), floor))))


@dataclass(frozen=True)
class ClientMetrics:
    client_id: str
    rmse: float
    mae: float
    mape: float


def client_metrics(client_id: str, pred, actual, floor: float = MAPE_FLOOR) -> ClientMetrics:
    return ClientMetrics(client_id, rmse(pred, actual), mae(pred, actual), mape(pred, actual, floor))


def average_metrics(per_client: list[ClientMetrics]) -> tuple[float, float, float]:
    """Arithmetic mean of per-client metrics."""
    if not per_client:
        raise ValueError("no client metrics to average")
    return (float(np.mean([m.rmse for m in per_client])),
            float(np.mean([m.mae for m in per_client])),
            float(np.mean([m.mape for m in per_client])))


def average_by_group(per_client: list[ClientMetrics], groups: dict[str, int]) -> tuple[float, float, float]:
    """Mean over groups of the within-group client means."""
    by_group: dict[int, list[ClientMetrics]] = {}
    for m in per_client:
        by_group.setdefault(groups[m.client_id], []).append(m)
    means = [average_metrics(by_group[g]) for g in sorted(by_group)]
    return tuple(float(np.mean(col)) for col in zip(*means))


@dataclass(frozen=True)
class MetricRow:
    regime: str
    model: str
    horizon: int
    n_features: int
    rmse: float
    mae: float
    mape: float
    seconds_per_epoch: float

    def sort_key(self):
        return (REGIMES.index(self.regime), self.horizon, self.n_features,
                MODEL_ORDER.index(self.model))


def _fmt(x: float) -> str:
    return repr(float(x))


def _sorted(rows):
    return sorted(rows, key=MetricRow.sort_key)


def report_csv(rows: list[MetricRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for r in _sorted(rows):
        w.writerow([r.regime, r.model, r.horizon, r.n_features, _fmt(r.rmse), _fmt(r.mae),
                    _fmt(r.mape), _fmt(r.seconds_per_epoch)])
    return buf.getvalue()


_MD_HEAD = ("| Horizon | Features | Model | RMSE | MAE | MAPE (%) | Time (s) |\n"
            "|---|---|---|---|---|---|---|\n")


def report_markdown(rows: list[MetricRow]) -> str:
    rows = _sorted(rows)
    if not rows:
        return _MD_HEAD
    out = []
    for regime in REGIMES:
        part = [r for r in rows if r.regime == regime]
        if not part:
            continue
        lines = [f"## {REGIME_TITLES[regime]}\n", "\n", _MD_HEAD]
        for r in part:
            lines.append(f"| {r.horizon} | {r.n_features} | {MODEL_LABELS[r.model]} | {_fmt(r.rmse)} "
                         f"| {_fmt(r.mae)} | {_fmt(r.mape)} | {_fmt(r.seconds_per_epoch)} |\n")
        out.append("".join(lines))
    return "\n".join(out)


def emit_report(rows: list[MetricRow], format: str = "csv") -> str:
    if format == "csv":
        return report_csv(rows)
    if format == "markdown":
        return report_markdown(rows)
    raise ValueError(f"unknown report format {format!r}")


def read_report_csv(path) -> list[MetricRow]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != REPORT_HEADER:
            raise ValueError(f"{path}: header must be {','.join(REPORT_HEADER)}")
        out = []
        for r in reader:
            out.append(MetricRow(r["regime"], r["model"], int(r["horizon"]), int(r["n_features"]),
                                 float(r["rmse"]), float(r["mae"]), float(r["mape"]),
                                 float(r["seconds_per_epoch"])))
    return out


def row_values(row: MetricRow) -> tuple:
    return tuple(getattr(row, f.name) for f in fields(row))


# plotting

_W, _H = 800, 320
_LEFT, _RIGHT, _TOP, _BOTTOM = 60, 20, 30, 40


def _polyline(xs, ys, colour):
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    return f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>\n'


def render_forecast_svg(client: str, actual, predicted) -> str:
    a = np.asarray(actual, dtype=np.float64).ravel()
    p = np.asarray(predicted, dtype=np.float64).ravel()
    if a.shape != p.shape:
        raise ValueError(f"actual and predicted lengths differ ({a.size} vs {p.size})")
    if a.size == 0:
        raise ValueError("nothing to plot")
    lo = float(min(a.min(), p.min()))
    hi = float(max(a.max(), p.max()))
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    n = a.size
    plot_w = _W - _LEFT - _RIGHT
    plot_h = _H - _TOP - _BOTTOM
    xs = _LEFT + (np.arange(n) / max(n - 1, 1)) * plot_w
    to_y = lambda v: _TOP + (1.0 - (v - lo) / (hi - lo)) * plot_h  # noqa: E731
    x0, y0, x1 = _LEFT, _TOP + plot_h, _LEFT + plot_w
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_W}" height="{_H}">\n',
        f'<text x="{_LEFT}" y="18" font-size="13">{_escape(client)}: actual (black) vs forecast (red)</text>\n',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>\n',
        f'<line x1="{x0}" y1="{_TOP}" x2="{x0}" y2="{y0}" stroke="black"/>\n',
    ]
    step = max(1, int(np.ceil(n / 12)))
    for h in range(0, n, step):
        parts.append(f'<text x="{xs[h]:.2f}" y="{y0 + 16}" font-size="10" text-anchor="middle">{h}</text>\n')
    parts.append(f'<text x="{(x0 + x1) / 2:.2f}" y="{_H - 6}" font-size="11" text-anchor="middle">hour</text>\n')
    for v in (lo, hi):
        parts.append(f'<text x="{x0 - 6}" y="{to_y(v) + 4:.2f}" font-size="10" text-anchor="end">{v:.3g}</text>\n')
    parts.append(_polyline(xs, to_y(a), "black"))
    parts.append(_polyline(xs, to_y(p), "red"))
    parts.append("</svg>\n")
    return "".join(parts)


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit_forecast_plot(client: str, actual, predicted, path) -> Path:
    path = Path(path)
    path.write_text(render_forecast_svg(client, actual, predicted), encoding="utf-8")
    return path
