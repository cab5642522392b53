import csv
import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fedstlf.evaluation import (MAPE_FLOOR, REPORT_HEADER, ClientMetrics, MetricRow,
                                average_by_group, average_metrics, emit_report, mae, mape,
                                read_report_csv, render_forecast_svg, report_csv, report_markdown,
                                rmse)

from oracles import mae_loop, mape_loop, rmse_loop

vec = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=40)


def test_worked_example():
    assert rmse([0, 2], [1, 1]) == 1.0
    assert mae([0, 2], [1, 1]) == 1.0
    assert mape([0, 2], [1, 1]) == 100.0
    assert mape([1.0], [0.0]) == pytest.approx(100.0 / MAPE_FLOOR)


def test_metrics_match_loops_on_random_vectors(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 50))
        p, a = rng.normal(size=n) * 10, rng.normal(size=n) * 10
        assert abs(rmse(p, a) - rmse_loop(p, a)) < 1e-12 * max(1.0, rmse_loop(p, a))
        assert abs(mae(p, a) - mae_loop(p, a)) < 1e-12 * max(1.0, mae_loop(p, a))
        ref = mape_loop(p, a, MAPE_FLOOR)
        assert abs(mape(p, a) - ref) <= 1e-12 * max(1.0, ref)


@given(vec)
def test_perfect_forecast_scores_zero(v):
    assert rmse(v, v) == mae(v, v) == mape(v, v) == 0.0


@given(vec, vec)
def test_rmse_dominates_mae(p, a):
    n = min(len(p), len(a))
    assert rmse(p[:n], a[:n]) >= mae(p[:n], a[:n]) - 1e-9


def test_metric_errors():
    with pytest.raises(ValueError):
        rmse([1, 2], [1])
    with pytest.raises(ValueError):
        mae([], [])
    with pytest.raises(ValueError):
        mape([1], [1], floor=0.0)


def test_group_averaging():
    ms = [ClientMetrics("a", 1, 1, 1), ClientMetrics("b", 3, 3, 3), ClientMetrics("c", 8, 8, 8)]
    assert average_metrics(ms) == (4.0, 4.0, 4.0)
    assert average_by_group(ms, {"a": 0, "b": 0, "c": 1}) == (5.0, 5.0, 5.0)
    with pytest.raises(ValueError):
        average_metrics([])


def full_matrix(rng):
    rows = []
    for regime in ("federated", "local", "central"):
        for model in ("transformer", "cnn", "lstm"):
            for h in (24, 12):
                for f in (7, 5):
                    rows.append(MetricRow(regime, model, h, f, *rng.random(4)))
    return rows


def test_report_csv_layout(rng):
    rows = full_matrix(rng)
    text = report_csv(rows)
    lines = text.splitlines()
    assert lines[0] == ",".join(REPORT_HEADER) and len(lines) == 37
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert [r["regime"] for r in parsed[:12]] == ["central"] * 12
    assert [(r["horizon"], r["n_features"], r["model"]) for r in parsed[:4]] == [
        ("12", "5", "cnn"), ("12", "5", "lstm"), ("12", "5", "transformer"), ("12", "7", "cnn")]


def test_markdown_has_one_table_per_regime(rng):
    rows = full_matrix(rng)
    md = report_markdown(rows)
    assert md.count("## ") == 3
    assert md.index("## Central") < md.index("## Local") < md.index("## Federated")
    body = [ln for ln in md.splitlines() if ln.startswith("| ") and not ln.startswith("| Horizon")]
    assert len(body) == 36
    assert report_markdown([]).startswith("| Horizon")


def test_csv_and_markdown_agree(rng, tmp_path):
    rows = full_matrix(rng)
    (tmp_path / "r.csv").write_text(report_csv(rows))
    back = read_report_csv(tmp_path / "r.csv")
    assert sorted(back, key=MetricRow.sort_key) == sorted(rows, key=MetricRow.sort_key)
    md_values = []
    for ln in report_markdown(rows).splitlines():
        cells = [c.strip() for c in ln.strip("|").split("|")]
        if len(cells) == 7 and cells[0].isdigit():
            md_values.append(tuple(float(c) for c in cells[3:]))
    csv_values = [(r.rmse, r.mae, r.mape, r.seconds_per_epoch)
                  for r in sorted(rows, key=MetricRow.sort_key)]
    assert md_values == csv_values
    assert emit_report(rows, "csv") == report_csv(rows)
    with pytest.raises(ValueError):
        emit_report(rows, "xlsx")


def test_read_rejects_bad_header(tmp_path):
    (tmp_path / "r.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="header"):
        read_report_csv(tmp_path / "r.csv")


def test_svg_is_deterministic_and_well_formed():
    a = np.sin(np.arange(48) / 4)
    svg = render_forecast_svg("c<1>", a, a + 0.1)
    assert svg == render_forecast_svg("c<1>", a, a + 0.1)
    assert svg.startswith("<?xml") and svg.rstrip().endswith("</svg>")
    assert svg.count("<polyline") == 2 and "c&lt;1&gt;" in svg
    import xml.etree.ElementTree as ET
    ET.fromstring(svg.split("\n", 1)[1])
    render_forecast_svg("flat", np.ones(3), np.ones(3))


def test_svg_errors():
    with pytest.raises(ValueError):
        render_forecast_svg("x", [], [])
    with pytest.raises(ValueError):
        render_forecast_svg("x", [1, 2], [1])
