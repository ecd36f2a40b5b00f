import json
import os

import pytest

from app import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, build_parser, main
from utils.storage import ReportStore


def test_parser_accepts_repeated_formats():
    args = build_parser().parse_args(["bench", "--format", "csv", "--format", "svg", "--seed", "4"])
    assert args.formats == ["csv", "svg"]
    assert args.seed == 4
    assert args.full_scale is None


def test_unknown_format_is_a_usage_error():
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["bench", "--format", "xlsx"])
    assert info.value.code == 2


def test_bad_config_exits_2(tmp_path, env_defaults):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"kind": "shape-table", "n": 1}))
    assert main(["shape-sim", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_dry_run_prints_grid(tmp_path, env_defaults, capsys):
    code = main(["shape-sim", "--replicates", "0", "--out", str(tmp_path), "--format", "csv"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "EMedian" in out
    assert os.path.join(str(tmp_path), "table1.csv") in out
    with open(tmp_path / "table1.csv", encoding="utf-8") as f:
        assert len(f.read().splitlines()) == 1 + 3 * 3 * 4


def test_bench_writes_outputs(tmp_path, env_defaults):
    path = tmp_path / "bench.json"
    path.write_text(json.dumps({"kind": "bench", "name": "tiny", "bench": {"sizes": [10], "dims": [3]}, "replicates": 1}))
    code = main(["bench", "--config", str(path), "--out", str(tmp_path), "--format", "json"])
    assert code == EXIT_OK
    with open(tmp_path / "tiny.json", encoding="utf-8") as f:
        payload = json.load(f)
    assert payload["kind"] == "bench"
    assert len(payload["rows"]) == 5


def test_malformed_tensor_file_exits_2(tmp_path, env_defaults):
    data = tmp_path / "tensors.csv"
    data.write_text("event_id,m11,m22,m33,m12,m13,m23,region\nE1,1,x,-1,0,0,0,2\n")
    config = tmp_path / "quake.json"
    config.write_text(json.dumps({"kind": "earthquake", "data": {"path": str(data)}, "bootstrap": {"enabled": False}}))
    assert main(["quake", "--config", str(config), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_missing_tensor_file_exits_3(tmp_path, env_defaults):
    config = tmp_path / "quake.json"
    config.write_text(json.dumps({"kind": "earthquake", "data": {"path": str(tmp_path / "none.csv")}}))
    assert main(["quake", "--config", str(config), "--out", str(tmp_path)]) == EXIT_RUNTIME


def test_too_few_events_exits_3(tmp_path, env_defaults):
    data = tmp_path / "tensors.csv"
    data.write_text("event_id,m11,m22,m33,m12,m13,m23,region\nE1,1,0,-1,0,0,0,2\n")
    config = tmp_path / "quake.json"
    config.write_text(json.dumps({"kind": "earthquake", "data": {"path": str(data)}}))
    assert main(["quake", "--config", str(config), "--out", str(tmp_path)]) == EXIT_RUNTIME


def _bench_config(tmp_path, name):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps({"kind": "bench", "name": name, "bench": {"sizes": [10], "dims": [3]}, "replicates": 1}))
    return str(path)


def test_archive_collects_reports_across_runs(tmp_path, env_defaults, capsys):
    archive = str(tmp_path / "reports.json")
    for name in ("first", "second", "first"):
        code = main(["bench", "--config", _bench_config(tmp_path, name), "--out", str(tmp_path), "--archive", archive])
        assert code == EXIT_OK
    assert archive in capsys.readouterr().out
    store = ReportStore()
    with open(archive, encoding="utf-8") as f:
        assert store.import_data(f.read()) == 2
    assert [r["name"] for r in store.get_all_reports()] == ["first", "second"]
    assert store.get_report("second")["kind"] == "bench"


def test_corrupt_archive_exits_2(tmp_path, env_defaults):
    archive = tmp_path / "reports.json"
    archive.write_text("{\n")
    code = main(["bench", "--config", _bench_config(tmp_path, "tiny"), "--out", str(tmp_path), "--archive", str(archive)])
    assert code == EXIT_CONFIG
