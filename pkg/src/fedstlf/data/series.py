from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HOUR = np.timedelta64(1, "h")


@dataclass
class LoadSeries:
    """Hourly load readings (kW) of one client plus aligned weather channels.

    Missing readings are NaN until the series has been cleaned.
    """

    client_id: str
    timestamps: np.ndarray  # datetime64[h], strictly increasing, hourly
    load: np.ndarray
    weather: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype="datetime64[h]")
        self.load = np.asarray(self.load, dtype=np.float64)
        self.weather = {k: np.asarray(v, dtype=np.float64) for k, v in self.weather.items()}
        n = len(self.timestamps)
        if len(self.load) != n or any(len(v) != n for v in self.weather.values()):
            raise ValueError(f"{self.client_id}: channels differ in length from timestamps ({n})")

    def __len__(self) -> int:
        return len(self.load)

    @property
    def n_missing(self) -> int:
        return int(np.isnan(self.load).sum())

    def hours(self) -> np.ndarray:
        """Hour of day, 0..23."""
        return (self.timestamps.astype("int64") % 24).astype(np.int64)

    def weekdays(self) -> np.ndarray:
        """Day of week with Monday = 0."""
        days = self.timestamps.astype("datetime64[D]").astype("int64")
        return ((days + 3) % 7).astype(np.int64)  # 1970-01-01 was a Thursday

    def slice(self, start: int, stop: int) -> "LoadSeries":
        return LoadSeries(self.client_id, self.timestamps[start:stop], self.load[start:stop].copy(),
                          {k: v[start:stop].copy() for k, v in self.weather.items()})

    def copy(self) -> "LoadSeries":
        return self.slice(0, len(self))
