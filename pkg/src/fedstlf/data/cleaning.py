from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .series import LoadSeries

SIGMA_WINDOW = 24
MAX_GAP_RUN = 6
MAX_MISSING_FRACTION = 0.25
HISTORY = 3


class DataQualityError(ValueError):
    pass


@dataclass
class CleaningReport:
    client_id: str
    filled_gaps: int = 0
    replaced_outliers: int = 0


def _forward_fill(values: np.ndarray, name: str, client_id: str) -> tuple[np.ndarray, int]:
    out = values.copy()
    missing = np.isnan(out)
    if not missing.any():
        return out, 0
    if missing[0]:
        raise DataQualityError(f"{client_id}: {name} starts with a missing value")
    run = 0
    for i in range(1, len(out)):
        if missing[i]:
            run += 1
            if run > MAX_GAP_RUN:
                raise DataQualityError(
                    f"{client_id}: {name} has more than {MAX_GAP_RUN} consecutive missing hours "
                    f"ending near index {i}")
            out[i] = out[i - 1]
        else:
            run = 0
    return out, int(missing.sum())


def clean_series(s: LoadSeries, report: CleaningReport | None = None) -> LoadSeries:
    """Forward-fill short gaps, then replace outliers sequentially.

    A reading is an outlier when it is negative or when it differs from
    the previous cleaned reading by more than two standard deviations of
    the trailing 24 cleaned readings. Outliers take the median of the
    three previous cleaned readings.

    The deviation test waits for a full 24-reading window: a standard
    deviation over only a few readings is tiny, and every replacement
    would then flatten the history further so the series locks at its
    opening level. For the same reason the test is skipped while the last
    three cleaned readings are identical (a forward-filled gap or a chain
    of replacements): a frozen history says nothing about the current
    level, and comparing against it would freeze the series until the
    real load happens to come back. Negative readings are caught from the
    fourth hour on. Every decision depends only on already-cleaned values
    and the current reading, which makes cleaning idempotent.
    """
    n = len(s)
    if n == 0:
        raise DataQualityError(f"{s.client_id}: empty series")
    frac = s.n_missing / n
    if frac > MAX_MISSING_FRACTION:
        raise DataQualityError(f"{s.client_id}: {frac:.1%} of load readings missing")
    load, filled = _forward_fill(s.load, "load", s.client_id)
    weather = {k: _forward_fill(v, k, s.client_id)[0] for k, v in s.weather.items()}

    if np.any(load[:HISTORY] < 0):
        raise DataQualityError(f"{s.client_id}: negative reading within the first {HISTORY} hours")
    replaced = 0
    for t in range(HISTORY, n):
        x = load[t]
        jump = False
        frozen = load[t - 1] == load[t - 2] == load[t - 3]
        if t >= SIGMA_WINDOW and not frozen:
            jump = abs(x - load[t - 1]) > 2.0 * load[t - SIGMA_WINDOW:t].std()
        if x < 0 or jump:
            fix = np.median(load[t - HISTORY:t])
            if fix != x:
                load[t] = fix
                replaced += 1
    if report is not None:
        report.filled_gaps += filled
        report.replaced_outliers += replaced
    return LoadSeries(s.client_id, s.timestamps.copy(), load, weather)


def write_cleaning_report(reports: list[CleaningReport], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["client_id", "filled_gaps", "replaced_outliers"])
        for r in reports:
            w.writerow([r.client_id, r.filled_gaps, r.replaced_outliers])
