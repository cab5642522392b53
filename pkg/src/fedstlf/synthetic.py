"""Campus-like synthetic meter fleet.

Three building archetypes with distinct weekly shapes share one
simulated weather record (plus small per-meter sensor jitter):

* administrative: single office-hours bump on weekdays, quiet weekends
* workshop: two shifts on weekdays, a half Saturday
* production: near-flat around the clock
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data.ingest import write_meter_csv
from .data.series import LoadSeries
from .seeding import derive_seed

ARCHETYPES = ("administrative", "workshop", "production")
START = np.datetime64("2019-01-01T00", "h")


@dataclass
class ClientProfile:
    client_id: str
    archetype: str
    base_load: float
    daily_amplitude: float
    weekly_amplitude: float
    noise_std: float
    temperature_coupling: float
    seed: int
    peak_hour: float = 13.0

    def __post_init__(self):
        if self.archetype not in ARCHETYPES:
            raise ValueError(f"unknown archetype {self.archetype!r}")
        if self.base_load <= 0:
            raise ValueError("base_load must be positive")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")


def _bump(h, centre, half_width):
    d = np.abs(h - centre)
    return np.where(d < half_width, 0.5 * (1.0 + np.cos(np.pi * d / half_width)), 0.0)


def archetype_shape(archetype: str, hour: np.ndarray, weekday: np.ndarray, peak_hour: float = 13.0):
    """Dimensionless hourly shape (roughly 0..1) for an archetype."""
    h = hour.astype(np.float64)
    shift = peak_hour - 13.0
    if archetype == "administrative":
        day = _bump(h, 13.0 + shift, 6.0)
        week = np.where(weekday < 5, 1.0, 0.15)
    elif archetype == "workshop":
        day = 0.9 * _bump(h, 9.5 + shift, 4.5) + _bump(h, 18.0 + shift, 4.5)
        week = np.select([weekday < 5, weekday == 5], [1.0, 0.5], 0.1)
    else:
        day = 0.15 * _bump(h, 12.0 + shift, 10.0)
        week = np.where(weekday < 5, 1.0, 0.85)
    return day * week


@dataclass
class Weather:
    timestamps: np.ndarray
    temp: np.ndarray
    rhum: np.ndarray
    extra: dict[str, np.ndarray] = field(default_factory=dict)


def simulate_weather(n_hours: int, seed: int, start=START) -> Weather:
    rng = np.random.default_rng(seed)
    ts = start + np.arange(n_hours).astype("timedelta64[h]")
    t = np.arange(n_hours, dtype=np.float64)
    doy = (ts.astype("datetime64[D]") - ts.astype("datetime64[Y]")).astype(np.int64)
    hour = t % 24
    ar = np.empty(n_hours)
    eps = rng.normal(0.0, 0.5, n_hours)
    acc = 0.0
    for i in range(n_hours):
        acc = 0.95 * acc + eps[i]
        ar[i] = acc
    temp = 10.0 - 9.0 * np.cos(2 * np.pi * (doy - 15) / 365.0) + 4.0 * np.cos(2 * np.pi * (hour - 15) / 24) + ar
    rhum = np.clip(75.0 - 1.8 * (temp - 10.0) + rng.normal(0.0, 4.0, n_hours), 15.0, 100.0)
    pressure = 1013.0 + np.cumsum(rng.normal(0.0, 0.3, n_hours)) * 0.2
    return Weather(ts, temp, rhum, {"pres": pressure})


def fleet_profiles(n_clients: int, master_seed: int, archetypes=ARCHETYPES) -> list[ClientProfile]:
    """Per-client parameters; archetypes are assigned round-robin."""
    profiles = []
    width = len(str(max(n_clients - 1, 0)))
    for i in range(n_clients):
        cid = f"client{i:0{max(width, 2)}d}"
        arch = archetypes[i % len(archetypes)]
        seed = derive_seed(master_seed, "client", cid)
        rng = np.random.default_rng(seed)
        base = {"administrative": rng.uniform(40, 150), "workshop": rng.uniform(20, 80),
                "production": rng.uniform(200, 500)}[arch]
        daily = base * {"administrative": rng.uniform(0.8, 1.2), "workshop": rng.uniform(0.9, 1.3),
                        "production": rng.uniform(0.10, 0.16)}[arch]
        profiles.append(ClientProfile(
            client_id=cid, archetype=arch, base_load=base, daily_amplitude=daily,
            weekly_amplitude=0.05 * daily, noise_std=rng.uniform(0.04, 0.08) * daily,
            temperature_coupling=rng.uniform(-0.004, 0.004) * base, seed=seed,
            peak_hour=13.0 + rng.uniform(-1.0, 1.0)))
    return profiles


def simulate_client(p: ClientProfile, weather: Weather) -> LoadSeries:
    rng = np.random.default_rng(p.seed)
    n = len(weather.timestamps)
    ts = weather.timestamps
    hour = (ts.astype(np.int64) % 24)
    weekday = (ts.astype("datetime64[D]").astype(np.int64) + 3) % 7
    week_hour = weekday * 24 + hour
    temp = weather.temp + rng.normal(0.0, 0.2, n)
    rhum = np.clip(weather.rhum + rng.normal(0.0, 1.0, n), 0.0, 100.0)
    load = (p.base_load
            + p.daily_amplitude * (0.5 * np.cos(2 * np.pi * (hour - p.peak_hour) / 24)
                                   + archetype_shape(p.archetype, hour, weekday, p.peak_hour))
            + p.weekly_amplitude * np.cos(2 * np.pi * (week_hour - 60) / 168)
            + p.temperature_coupling * (temp - 10.0)
            + rng.normal(0.0, 1.0, n) * p.noise_std)
    load = np.maximum(load, 0.0)
    channels = {"temp": temp, "rhum": rhum}
    for name, values in weather.extra.items():
        channels[name] = values + rng.normal(0.0, 0.05, n)
    return LoadSeries(p.client_id, ts.copy(), load, channels)


def generate_fleet(n_clients: int, n_hours: int, master_seed: int,
                   archetypes=ARCHETYPES, return_profiles: bool = False):
    if n_clients < 1:
        raise ValueError("n_clients must be >= 1")
    if n_hours < 24 * 7 * 4:
        raise ValueError(f"n_hours must cover at least four weeks (672), got {n_hours}")
    weather = simulate_weather(n_hours, derive_seed(master_seed, "weather"))
    profiles = fleet_profiles(n_clients, master_seed, archetypes)
    fleet = [simulate_client(p, weather) for p in profiles]
    return (fleet, profiles) if return_profiles else fleet


@dataclass
class CorruptionLog:
    gaps: list[int] = field(default_factory=list)
    outliers: list[int] = field(default_factory=list)


def inject_gaps_and_outliers(s: LoadSeries, gap_rate: float, outlier_rate: float, seed: int):
    """Blank single hours and plant negative or spike readings; returns (series, log)."""
    for name, rate in (("gap_rate", gap_rate), ("outlier_rate", outlier_rate)):
        if not 0.0 <= rate <= 0.05:
            raise ValueError(f"{name} must lie in [0, 0.05], got {rate}")
    out = s.copy()
    log = CorruptionLog()
    if gap_rate == 0 and outlier_rate == 0:
        return out, log
    rng = np.random.default_rng(seed)
    n = len(s)
    u_gap = rng.random(n)
    u_out = rng.random(n)
    kind = rng.random(n)
    for i in range(4, n):
        if u_gap[i] < gap_rate:
            out.load[i] = np.nan
            log.gaps.append(i)
        elif u_out[i] < outlier_rate:
            level = s.load[i] if s.load[i] > 0 else 1.0
            out.load[i] = -level if kind[i] < 0.5 else 4.0 * level + 10.0
            log.outliers.append(i)
    return out, log


def write_fleet(fleet: list[LoadSeries], profiles: list[ClientProfile], directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for s in fleet:
        write_meter_csv(s, directory / f"{s.client_id}.csv")
    manifest = directory / "manifest.csv"
    with manifest.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["client_id", "archetype", "seed"])
        for p in profiles:
            w.writerow([p.client_id, p.archetype, p.seed])
    return manifest
