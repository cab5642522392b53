"""CSV boundary for meter data: ``timestamp,load[,temp,rhum,...]``."""
from __future__ import annotations

import csv
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .series import LoadSeries


class IngestionError(ValueError):
    pass


def _parse_time(text: str) -> np.datetime64:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is not None:
        ts = ts.astimezone(timezone.utc).replace(tzinfo=None)
    if ts.minute or ts.second or ts.microsecond:
        raise ValueError("timestamp not on the hour")
    return np.datetime64(ts, "h")


def _parse_value(text: str) -> float:
    text = text.strip()
    if text == "" or text.lower() in ("nan", "na", "null"):
        return np.nan
    return float(text)


def load_meter_csv(path, client_id: str | None = None) -> LoadSeries:
    """Parse one client's hourly CSV; missing hours become NaN rows."""
    path = Path(path)
    client_id = client_id or path.stem
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestionError(f"{path}: empty file") from None
        if header[:2] != ["timestamp", "load"]:
            raise IngestionError(f"{path}: header must start with 'timestamp,load', got {header}")
        extra = header[2:]
        times, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise IngestionError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                t = _parse_time(row[0])
                vals = [_parse_value(c) for c in row[1:]]
            except ValueError as exc:
                raise IngestionError(f"{path}:{lineno}: unparseable row ({exc})") from None
            if times and t <= times[-1]:
                kind = "duplicated" if t == times[-1] else "non-monotonic"
                raise IngestionError(f"{path}:{lineno}: {kind} timestamp {t}")
            times.append(t)
            rows.append(vals)
    if not times:
        raise IngestionError(f"{path}: no data rows")

    stamps = np.array(times, dtype="datetime64[h]")
    values = np.array(rows, dtype=np.float64)
    full = np.arange(stamps[0], stamps[-1] + np.timedelta64(1, "h"), dtype="datetime64[h]")
    grid = np.full((len(full), values.shape[1]), np.nan)
    grid[(stamps - stamps[0]).astype(np.int64)] = values
    weather = {name: grid[:, i + 1] for i, name in enumerate(extra)}
    return LoadSeries(client_id, full, grid[:, 0], weather)


def write_meter_csv(series: LoadSeries, path) -> None:
    path = Path(path)
    names = list(series.weather)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "load", *names])
        for i, t in enumerate(series.timestamps):
            vals = [series.load[i]] + [series.weather[n][i] for n in names]
            w.writerow([f"{t}:00"] + ["" if np.isnan(v) else repr(float(v)) for v in vals])
