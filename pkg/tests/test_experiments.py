import json
import math

import numpy as np
import pytest

from components.bootstrap import FRAME_ESTIMATORS
from components.experiments import ExperimentReport, run_experiment
from templates.report_template import ReportTemplate
from utils.config import build_config
from utils.errors import NotConverged


def _shape_config(**overrides):
    values = {
        "n": 30,
        "replicates": 2,
        "contamination": [0, 5],
        "distribution": {"shapes": [1], "mom_subsets": 3},
    }
    return build_config("shape-table", values, overrides)


def _frame_config(**overrides):
    values = {
        "n": 20,
        "replicates": 2,
        "contamination": [0, 4],
        "distribution": {"cases": [[5.0, 5.0, 5.0]]},
        "bootstrap": {"enabled": True, "B": 5},
    }
    return build_config("frame-table", values, overrides)


def _payload_bytes(report):
    return json.dumps(report.to_payload(), sort_keys=True)


def test_shape_experiment_rows(env_defaults):
    report = run_experiment(_shape_config())
    assert report.columns == ReportTemplate.get_columns("shape-table")
    assert len(report.rows) == 2 * 4
    for row in report.rows:
        assert row["successes"] + row["failures"] == 2
        if row["successes"]:
            assert 0.0 <= row["median_error"] <= math.pi / 2
    assert set(report.extras["errors"]) == {"shape1_outliers0", "shape1_outliers5"}
    assert report.timing["total_seconds"] >= 0


def test_shape_experiment_is_deterministic(env_defaults):
    assert _payload_bytes(run_experiment(_shape_config())) == _payload_bytes(run_experiment(_shape_config()))
    other = run_experiment(_shape_config(seed=99))
    assert _payload_bytes(other) != _payload_bytes(run_experiment(_shape_config()))


def test_worker_count_does_not_change_results(env_defaults):
    serial = run_experiment(_shape_config(workers=1))
    pooled = run_experiment(_shape_config(workers=2))
    assert _payload_bytes(serial).replace('"workers": 1', "") == _payload_bytes(pooled).replace('"workers": 2', "")


def test_shape_dry_run(env_defaults):
    report = run_experiment(_shape_config(replicates=0))
    assert report.dry_run
    assert len(report.rows) == 8
    assert all(row["successes"] == 0 for row in report.rows)
    assert all(np.isnan(row["median_error"]) for row in report.rows)


def test_frame_experiment_with_coverage(env_defaults):
    report = run_experiment(_frame_config())
    assert len(report.rows) == 2 * 2 * 3
    assert {row["axis"] for row in report.rows} == {"m1", "m2", "m3"}
    for row in report.rows:
        assert row["kappa"] == "5/5/5"
        if row["estimator"] == "mean":
            assert np.isnan(row["coverage"])
        elif row["successes"]:
            assert 0.0 <= row["coverage"] <= 1.0


def test_earthquake_analysis(env_defaults):
    config = build_config("earthquake", {"bootstrap": {"B": 10}})
    report = run_experiment(config)
    assert len(report.rows) == 3 * 2 * 3
    counts = {row["variant"]: row["n_events"] for row in report.rows}
    assert counts == {"full": 21, "sub": 19, "cont": 23}
    for row in report.rows:
        assert np.isclose(row["x"] ** 2 + row["y"] ** 2 + row["z"] ** 2, 1.0)
        if row["variant"] == "full":
            assert row["shift"] == pytest.approx(0.0)
        assert row["se"] >= 0
    assert len(report.extras["events"]) == 21
    assert set(report.extras["ellipses"]) == {f"{v}/{e}" for v in ("full", "sub", "cont") for e in ("mean", "median")}


def test_earthquake_shift_needs_the_full_data_estimate(env_defaults, monkeypatch):
    median = FRAME_ESTIMATORS["median"]

    def fails_on_full_data(frames):
        if len(frames) == 21:
            raise NotConverged("iteration cap reached")
        return median(frames)

    monkeypatch.setitem(FRAME_ESTIMATORS, "median", fails_on_full_data)
    report = run_experiment(build_config("earthquake", {"bootstrap": {"enabled": False}}))
    median_rows = [row for row in report.rows if row["estimator"] == "median"]
    assert {row["variant"] for row in median_rows} == {"sub", "cont"}
    assert all(np.isnan(row["shift"]) for row in median_rows)
    ledger = {(f["cell"], f["error_type"]) for f in report.failures}
    assert {("full/median", "NotConverged"), ("sub/median", "MissingReference"), ("cont/median", "MissingReference")} <= ledger
    mean_full = [row for row in report.rows if row["estimator"] == "mean" and row["variant"] == "full"]
    assert all(row["shift"] == pytest.approx(0.0) for row in mean_full)


def test_earthquake_dry_run_has_placeholder_rows(env_defaults):
    report = run_experiment(build_config("earthquake", {}, {"replicates": 0}))
    assert report.dry_run
    assert len(report.rows) == 18
    assert all(np.isnan(row["x"]) for row in report.rows)


def _bench_config(**overrides):
    return build_config("bench", {"replicates": 2, "bench": {"sizes": [10], "dims": [3]}}, overrides)


def test_benchmark_rows(env_defaults):
    report = run_experiment(_bench_config())
    operations = [row["operation"] for row in report.rows]
    assert operations == ["spatial_median", "project_stiefel", "project_grassmann", "project_cp", "pfm_proj_stiefel"]
    assert all(row["repeats"] == 2 for row in report.rows)
    timings = report.timing["operations"]
    assert [t["operation"] for t in timings] == operations
    assert all(t["min_seconds"] <= t["median_seconds"] for t in timings)


def test_benchmark_payload_is_deterministic(env_defaults):
    first = run_experiment(_bench_config())
    assert "median_seconds" not in first.columns
    assert _payload_bytes(first) == _payload_bytes(run_experiment(_bench_config()))


def test_payload_restores_report(env_defaults):
    report = run_experiment(_shape_config())
    restored = ExperimentReport.from_payload(json.loads(_payload_bytes(report)))
    assert restored.name == report.name
    assert restored.columns == report.columns
    assert len(restored.rows) == len(report.rows)
    assert "timing" not in report.to_payload()


@pytest.mark.slow
def test_median_beats_mean_under_frame_contamination(env_defaults):
    config = build_config(
        "frame-table",
        {"replicates": 30, "contamination": [15], "distribution": {"cases": [[25.0, 5.0, 5.0]]}},
    )
    report = run_experiment(config)
    errors = {row["estimator"]: row["mean_error"] for row in report.rows if row["axis"] == "m1"}
    assert errors["median"] < errors["mean"]
