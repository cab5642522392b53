"""Command-line entry point: ``fedstlf {generate,cluster,run,report}``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 training failure.
The output directory can be redirected with ``FEDSTLF_OUTPUT_DIR``.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .clustering import (InsufficientHistoryError, cluster_purity, write_assignment_csv,
                         write_centroid_csvs)
from .config import OUTPUT_ENV, ConfigError, parse_overrides, resolve_config
from .data import DataQualityError, DegenerateFeatureError, IngestionError, WindowError
from .evaluation import emit_report, read_report_csv
from .experiment import (EXIT_CONFIG, EXIT_DATA, EXIT_OK, DataError, clean_fleet, cluster_fleet,
                         load_fleet, run_matrix)
from .federated import InsufficientSpanError
from .seeding import derive_seed
from .synthetic import generate_fleet, inject_gaps_and_outliers, write_fleet

DATA_ERRORS = (DataError, IngestionError, DataQualityError, DegenerateFeatureError, WindowError,
               InsufficientHistoryError, InsufficientSpanError, FileNotFoundError)


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", default="desk", help="desk (default) or paper (long-running)")
    p.add_argument("--config", help="flat key = value file (a run manifest works too)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key; repeatable")


def _resolve(args):
    return resolve_config(args.preset, args.config, parse_overrides(args.set))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="fedstlf",
        description="Clustered federated short-term load forecasting experiments. "
                    f"Outputs go to output_dir, overridable with ${OUTPUT_ENV}.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic fleet as meter CSVs plus manifest.csv")
    _config_args(g)
    g.add_argument("--out", help="target directory (default: <output_dir>/data)")

    c = sub.add_parser("cluster", help="clean the fleet and write the DTW k-means assignment")
    _config_args(c)

    r = sub.add_parser("run", help="run the scenario matrix and write reports")
    _config_args(r)

    rep = sub.add_parser("report", help="re-render a stored report.csv")
    rep.add_argument("input", help="report.csv written by `run`")
    rep.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    rep.add_argument("--out", help="write to this file instead of stdout")
    return parser


def cmd_generate(args) -> int:
    cfg = _resolve(args)
    target = Path(args.out) if args.out else Path(cfg.output_dir) / "data"
    fleet, profiles = generate_fleet(cfg.n_clients, cfg.n_hours, cfg.seed, return_profiles=True)
    fleet = [inject_gaps_and_outliers(s, cfg.gap_rate, cfg.outlier_rate,
                                      derive_seed(cfg.seed, "corrupt", s.client_id))[0]
             for s in fleet]
    manifest = write_fleet(fleet, profiles, target)
    print(f"wrote {len(fleet)} meter files and {manifest}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    cfg = _resolve(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    fleet = load_fleet(cfg)
    series, _ = clean_fleet(fleet)
    result = cluster_fleet(series, cfg)
    write_assignment_csv(result, out / "cluster_assignment.csv")
    write_centroid_csvs(result, out / "centroids")
    line = f"k={result.k} inertia={result.inertia:.6g} sizes={result.sizes()}"
    if fleet.labels:
        line += f" purity={cluster_purity(result, fleet.labels):.3f}"
    print(line)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _resolve(args)
    summary = run_matrix(cfg)
    print(f"{len(summary.rows)} scenario rows -> {Path(cfg.output_dir) / 'report.csv'} "
          f"({summary.wall_seconds:.1f} s)")
    for line in summary.failures:
        print(f"FAILED {line}", file=sys.stderr)
    return summary.exit_code


def cmd_report(args) -> int:
    try:
        rows = read_report_csv(args.input)
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    text = emit_report(rows, args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "cluster": cmd_cluster, "run": cmd_run, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
