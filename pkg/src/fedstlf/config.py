"""Flat ``key = value`` experiment configuration with presets and validation."""
from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .data.windows import FEATURE_SETS, HORIZONS
from .evaluation import MAPE_FLOOR
from .federated.aggregation import AGGREGATIONS
from .federated.regimes import HOURS_PER_MONTH, REGIMES
from .federated.transport import TRANSPORTS
from .models.architectures import KINDS

OUTPUT_ENV = "FEDSTLF_OUTPUT_DIR"
MIN_HOURS = 24 * 7 * 4


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("\n".join(errors))
        self.errors = list(errors)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    source: str = "generate"  # "generate" or a directory of meter CSVs
    preset: str = "desk"
    n_clients: int = 8
    n_hours: int = 2184
    gap_rate: float = 0.002
    outlier_rate: float = 0.001
    k: int = 3
    regimes: tuple[str, ...] = REGIMES
    models: tuple[str, ...] = ("cnn", "lstm", "transformer")
    horizons: tuple[int, ...] = HORIZONS
    features: tuple[int, ...] = FEATURE_SETS
    epochs: int = 6
    early_stopping: bool = True
    patience: int = 10
    n_epoch: int = 3
    n_round: int = 2
    aggregation: str = "data_weighted"
    transport: str = "inprocess"
    limited_months: float | None = None
    band: int = 24
    barycenter_iters: int = 10
    kmeans_rounds: int = 20
    mape_floor: float = MAPE_FLOOR
    plots: bool = True
    output_dir: str = "fedstlf_out"

    @property
    def generated(self) -> bool:
        return self.source == "generate"

    def scenarios(self) -> list[tuple[str, str, int, int]]:
        return [(r, m, h, f) for h in self.horizons for f in self.features
                for m in self.models for r in self.regimes]

    def to_pairs(self) -> list[tuple[str, str]]:
        return [(f.name, _render(getattr(self, f.name))) for f in fields(self)]


PRESETS: dict[str, dict[str, str]] = {
    "desk": {"preset": "desk", "seed": "1", "n_clients": "8", "n_hours": "2184", "k": "3",
             "epochs": "6", "n_epoch": "3", "n_round": "2"},
    # long-running: 33 clients, two years, the full epoch budget
    "paper": {"preset": "paper", "seed": "1", "n_clients": "33", "n_hours": str(2 * 365 * 24),
              "k": "6", "epochs": "100", "n_epoch": "20", "n_round": "2"},
}


def _render(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_kv_text(text: str, origin: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError([f"{origin}:{lineno}: expected 'key = value', got {line!r}"])
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config_file(path) -> dict[str, str]:
    return parse_kv_text(Path(path).read_text(encoding="utf-8"), str(path))


def parse_overrides(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError([f"--set expects key=value, got {item!r}"])
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_INTS = ("seed", "n_clients", "n_hours", "k", "epochs", "patience", "n_epoch", "n_round", "band",
         "barycenter_iters", "kmeans_rounds")
_FLOATS = ("gap_rate", "outlier_rate", "mape_floor")
_BOOLS = ("early_stopping", "plots")


def _bool(v: str) -> bool:
    low = v.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _list(v: str) -> list[str]:
    return [x.strip() for x in v.split(",") if x.strip()]


def validate_config(raw: dict[str, str]) -> ExperimentConfig:
    """Parse and cross-check a flat config; every violation is reported at once."""
    errors: list[str] = []
    values: dict = {}
    for key in raw:
        if key not in _FIELDS:
            errors.append(f"unknown key {key!r}")
    if "seed" not in raw:
        errors.append("seed is required")

    def parse(key, fn):
        if key not in raw:
            return
        try:
            values[key] = fn(raw[key])
        except ValueError as exc:
            errors.append(f"{key}: {exc}")

    for key in _INTS:
        parse(key, int)
    for key in _FLOATS:
        parse(key, float)
    for key in _BOOLS:
        parse(key, _bool)
    for key in ("source", "preset", "aggregation", "transport", "output_dir"):
        if key in raw:
            values[key] = raw[key]
    parse("limited_months", lambda v: None if v.lower() == "none" else float(v))
    parse("regimes", lambda v: tuple(_list(v)))
    parse("models", lambda v: tuple(_list(v)))
    parse("horizons", lambda v: tuple(int(x) for x in _list(v)))
    parse("features", lambda v: tuple(int(x) for x in _list(v)))

    defaults = ExperimentConfig(seed=0)
    get = lambda key: values.get(key, getattr(defaults, key))  # noqa: E731

    for r in get("regimes"):
        if r not in REGIMES:
            errors.append(f"regimes: unknown regime {r!r} (choose from {', '.join(REGIMES)})")
    for m in get("models"):
        if m not in KINDS:
            errors.append(f"models: unknown model {m!r} (choose from {', '.join(KINDS)})")
    for h in get("horizons"):
        if h not in HORIZONS:
            errors.append(f"horizons: {h} is not a supported horizon (12 or 24)")
    for f in get("features"):
        if f not in FEATURE_SETS:
            errors.append(f"features: {f} is not a supported feature count (5 or 7)")
    for key in ("regimes", "models", "horizons", "features"):
        if not get(key):
            errors.append(f"{key}: at least one entry required")
        elif len(set(get(key))) != len(get(key)):
            errors.append(f"{key}: duplicate entries")
    if get("aggregation") not in AGGREGATIONS:
        errors.append(f"aggregation: must be one of {', '.join(AGGREGATIONS)}")
    if get("transport") not in TRANSPORTS:
        errors.append(f"transport: must be one of {', '.join(TRANSPORTS)}")
    if get("preset") not in PRESETS:
        errors.append(f"preset: must be one of {', '.join(PRESETS)}")
    if get("n_clients") < 1:
        errors.append("n_clients must be >= 1")
    if get("k") < 1:
        errors.append("k must be >= 1")
    if get("source") == "generate":
        if get("k") > get("n_clients"):
            errors.append(f"k exceeds client count (k={get('k')}, n_clients={get('n_clients')})")
        if get("n_hours") < MIN_HOURS:
            errors.append(f"n_hours must be >= {MIN_HOURS} (four weeks)")
    elif not Path(get("source")).is_dir():
        errors.append(f"source: {get('source')!r} is neither 'generate' nor a directory")
    for key in ("epochs", "n_epoch", "n_round", "barycenter_iters", "kmeans_rounds", "patience"):
        if get(key) < (0 if key in ("epochs", "n_epoch") else 1):
            errors.append(f"{key} out of range: {get(key)}")
    if get("band") < 0:
        errors.append("band must be >= 0")
    for key in ("gap_rate", "outlier_rate"):
        if not 0.0 <= get(key) <= 0.05:
            errors.append(f"{key} must lie in [0, 0.05]")
    if not get("mape_floor") > 0:
        errors.append("mape_floor must be positive")
    months = get("limited_months")
    if months is not None:
        if months <= 0:
            errors.append("limited_months must be positive")
        elif get("source") == "generate" and months * HOURS_PER_MONTH >= get("n_hours"):
            errors.append(f"limited_months={months:g} must be shorter than the data span "
                          f"({get('n_hours')} hours)")
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(**values)


def resolve_config(preset: str | None = "desk", config_file=None,
                   overrides: dict[str, str] | None = None,
                   environ: dict[str, str] | None = None) -> ExperimentConfig:
    """Preset < config file < ``FEDSTLF_OUTPUT_DIR`` < command-line overrides."""
    env = os.environ if environ is None else environ
    raw: dict[str, str] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError([f"unknown preset {preset!r} (choose from {', '.join(PRESETS)})"])
        raw.update(PRESETS[preset])
    if config_file is not None:
        raw.update(load_config_file(config_file))
    if env.get(OUTPUT_ENV):
        raw["output_dir"] = env[OUTPUT_ENV]
    raw.update(overrides or {})
    return validate_config(raw)


def render_config(cfg: ExperimentConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.to_pairs())
