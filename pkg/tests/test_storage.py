import json

import pytest

from utils.config import SCHEMA_VERSION
from utils.errors import InvalidInput, ParseError
from utils.storage import ReportStore


def _payload(name, value=1):
    return {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "kind": "bench",
        "config": {"seed": 1},
        "columns": ["operation", "repeats"],
        "rows": [{"operation": "project_cp", "repeats": value}],
        "failures": [],
    }


def test_save_get_delete():
    store = ReportStore()
    store.save_report(_payload("b"))
    store.save_report(_payload("a"))
    assert [r["name"] for r in store.get_all_reports()] == ["a", "b"]
    assert store.get_report("a")["rows"][0]["repeats"] == 1
    assert store.get_report("missing") is None
    assert store.delete_report("a")
    assert not store.delete_report("a")


def test_save_replaces_by_name():
    store = ReportStore()
    store.save_report(_payload("a", 1))
    store.save_report(_payload("a", 2))
    assert len(store.get_all_reports()) == 1
    assert store.get_report("a")["rows"][0]["repeats"] == 2


def test_invalid_payload_is_rejected():
    bad = _payload("a")
    bad["rows"][0]["extra"] = 1
    with pytest.raises(InvalidInput):
        ReportStore().save_report(bad)


def test_export_import_round_trip():
    store = ReportStore()
    store.save_report(_payload("a"))
    store.save_report(_payload("b"))
    exported = store.export_all_data()
    assert exported == store.export_all_data()

    other = ReportStore()
    assert other.import_data(exported) == 2
    assert other.export_all_data() == exported
    other.clear_all_data()
    assert other.get_all_reports() == []


def test_import_errors():
    store = ReportStore()
    with pytest.raises(ParseError) as info:
        store.import_data('{\n  "reports": [\n')
    assert info.value.line >= 2
    with pytest.raises(InvalidInput):
        store.import_data(json.dumps({"schema_version": "0.1", "reports": []}))
    with pytest.raises(InvalidInput):
        store.import_data(json.dumps({"schema_version": SCHEMA_VERSION}))
