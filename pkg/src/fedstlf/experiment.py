"""Scenario-matrix orchestration: data -> clustering -> regimes -> reports."""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

from .clustering import (ClusterAssignment, client_profile_for_clustering, kmeans_dtw,
                         write_assignment_csv, write_centroid_csvs)
from .config import ConfigError, ExperimentConfig, render_config
from .data import (CleaningReport, LoadSeries, clean_series, load_meter_csv, prepare_fleet,
                   select_features, train_span, write_cleaning_report)
from .evaluation import (MetricRow, average_by_group, average_metrics, emit_forecast_plot,
                         report_csv, report_markdown)
from .federated import RegimeConfig, RegimeResult, limited_data_view, run_regime
from .models import ModelSpec
from .seeding import derive_seed
from .synthetic import generate_fleet, inject_gaps_and_outliers

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_TRAINING = 0, 1, 2, 3
PLOT_HOURS = 168


class DataError(RuntimeError):
    pass


@dataclass
class Fleet:
    series: list[LoadSeries]
    labels: dict[str, str] = field(default_factory=dict)  # client_id -> archetype, when known


def load_fleet(cfg: ExperimentConfig) -> Fleet:
    """Generated (and lightly corrupted) fleet, or every meter CSV in ``cfg.source``."""
    if cfg.generated:
        series, profiles = generate_fleet(cfg.n_clients, cfg.n_hours, cfg.seed, return_profiles=True)
        out = [inject_gaps_and_outliers(s, cfg.gap_rate, cfg.outlier_rate,
                                        derive_seed(cfg.seed, "corrupt", s.client_id))[0]
               for s in series]
        return Fleet(out, {p.client_id: p.archetype for p in profiles})
    src = Path(cfg.source)
    paths = sorted(p for p in src.glob("*.csv") if p.name != "manifest.csv")
    if not paths:
        raise DataError(f"no meter CSVs found in {src}")
    series = [load_meter_csv(p) for p in paths]
    labels = {}
    manifest = src / "manifest.csv"
    if manifest.exists():
        with manifest.open(newline="", encoding="utf-8") as fh:
            labels = {r["client_id"]: r["archetype"] for r in csv.DictReader(fh)}
    return Fleet(series, labels)


def clean_fleet(fleet: Fleet) -> tuple[list[LoadSeries], list[CleaningReport]]:
    reports, cleaned = [], []
    for s in sorted(fleet.series, key=lambda s: s.client_id):
        r = CleaningReport(s.client_id)
        cleaned.append(clean_series(s, r))
        reports.append(r)
    return cleaned, reports


def cluster_fleet(series: list[LoadSeries], cfg: ExperimentConfig) -> ClusterAssignment:
    if cfg.k > len(series):
        raise ConfigError([f"k exceeds client count (k={cfg.k}, n_clients={len(series)})"])
    profiles = {s.client_id: client_profile_for_clustering(s) for s in series}
    return kmeans_dtw(profiles, cfg.k, seed=derive_seed(cfg.seed, "kmeans"),
                      max_rounds=cfg.kmeans_rounds, band=cfg.band,
                      barycenter_iters=cfg.barycenter_iters)


def write_feature_selection(series: list[LoadSeries], path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["client_id", "candidate", "pearson_r", "selected"])
        for s in series:
            sel = select_features(s, train_span(len(s)))
            chosen = set(sel.selected)
            for name, r in sel.correlations.items():
                w.writerow([s.client_id, name, repr(r), "yes" if name in chosen else "no"])
            for name in sel.skipped:
                w.writerow([s.client_id, name, "", "undefined"])


def regime_config(cfg: ExperimentConfig, regime: str) -> RegimeConfig:
    return RegimeConfig(regime, n_epoch=cfg.n_epoch, n_round=cfg.n_round, epochs=cfg.epochs,
                        early_stopping=None if regime == "federated" else cfg.early_stopping,
                        patience=cfg.patience, aggregation=cfg.aggregation,
                        mape_floor=cfg.mape_floor, transport=cfg.transport)


def model_spec(cfg: ExperimentConfig, kind: str, horizon: int, n_features: int) -> ModelSpec:
    """Paper-configuration spec; the init seed is shared by all regimes of a scenario."""
    return ModelSpec(kind, horizon, n_features,
                     seed=derive_seed(cfg.seed, "model", kind, horizon, n_features))


@dataclass
class RunSummary:
    rows: list[MetricRow] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    results: list[RegimeResult] = field(default_factory=list)
    assignment: ClusterAssignment | None = None
    wall_seconds: float = 0.0
    output_dir: Path | None = None

    @property
    def exit_code(self) -> int:
        return EXIT_TRAINING if self.failures else EXIT_OK


def _scenario_tag(regime, kind, h, f):
    return f"{regime}_{kind}_h{h}_f{f}"


def run_matrix(cfg: ExperimentConfig, fleet: Fleet | None = None, keep_results: bool = False) -> RunSummary:
    """Run every requested (regime, model, horizon, features) scenario and write artifacts.

    Data problems raise before any training; training failures are
    collected per scenario and reflected in ``exit_code``.
    """
    t_start = time.perf_counter()
    out = Path(cfg.output_dir)
    for sub in ("checkpoints", "plots", "centroids"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    summary = RunSummary(output_dir=out)

    fleet = fleet if fleet is not None else load_fleet(cfg)
    series, reports = clean_fleet(fleet)
    write_cleaning_report(reports, out / "cleaning_report.csv")
    write_feature_selection(series, out / "feature_selection.csv")
    if "federated" in cfg.regimes:
        summary.assignment = cluster_fleet(series, cfg)
        write_assignment_csv(summary.assignment, out / "cluster_assignment.csv")
        write_centroid_csvs(summary.assignment, out / "centroids")
    assignment = summary.assignment.assignment if summary.assignment else None

    client_rows, group_rows = [], []
    for h in cfg.horizons:
        for f in cfg.features:
            clients = prepare_fleet(series, h, f)
            if cfg.limited_months is not None:
                clients = limited_data_view(clients, cfg.limited_months)
            for kind in cfg.models:
                spec = model_spec(cfg, kind, h, f)
                for regime in cfg.regimes:
                    tag = _scenario_tag(regime, kind, h, f)
                    res = run_regime(regime, clients, spec, regime_config(cfg, regime), cfg.seed,
                                     assignment)
                    summary.failures += [f"{tag}: {msg}" for msg in res.failures]
                    if keep_results:
                        summary.results.append(res)
                    for name, params in sorted(res.checkpoints.items()):
                        params.save(out / "checkpoints" / f"{tag}_{name}.fcp")
                    if not res.client_metrics:
                        continue
                    r, a, m = average_metrics(res.client_metrics)
                    summary.rows.append(MetricRow(regime, kind, h, f, r, a, m, res.seconds_per_epoch))
                    for cm in res.client_metrics:
                        client_rows.append([regime, kind, h, f, cm.client_id,
                                            res.cluster_of.get(cm.client_id, ""),
                                            repr(cm.rmse), repr(cm.mae), repr(cm.mape)])
                    if regime == "federated":
                        gr = average_by_group(res.client_metrics, res.cluster_of)
                        group_rows.append([regime, kind, h, f, "client", *map(repr, (r, a, m))])
                        group_rows.append([regime, kind, h, f, "cluster", *map(repr, gr)])
                    if cfg.plots:
                        cid = res.client_metrics[0].client_id
                        actual, pred = res.predictions[cid]
                        emit_forecast_plot(f"{cid} {tag}", actual[:PLOT_HOURS, 0],
                                           pred[:PLOT_HOURS, 0], out / "plots" / f"{tag}.svg")

    (out / "report.csv").write_text(report_csv(summary.rows), encoding="utf-8")
    (out / "report.md").write_text(report_markdown(summary.rows), encoding="utf-8")
    _write_rows(out / "client_metrics.csv",
                ["regime", "model", "horizon", "n_features", "client_id", "cluster", "rmse", "mae",
                 "mape"], client_rows)
    _write_rows(out / "grouped_metrics.csv",
                ["regime", "model", "horizon", "n_features", "averaged_over", "rmse", "mae", "mape"],
                group_rows)
    failures_path = out / "failures.txt"
    if summary.failures:
        failures_path.write_text("".join(f"{x}\n" for x in summary.failures), encoding="utf-8")
    elif failures_path.exists():
        failures_path.unlink()
    summary.wall_seconds = time.perf_counter() - t_start
    write_manifest(cfg, out / "manifest.txt", summary.wall_seconds)
    return summary


def _write_rows(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_manifest(cfg: ExperimentConfig, path: Path, wall_seconds: float) -> None:
    text = ("# fedstlf run manifest; rerun with: fedstlf run --config <this file>\n"
            f"# wall_time_seconds = {wall_seconds:.3f}\n" + render_config(cfg))
    path.write_text(text, encoding="utf-8")
