import csv
import io
import json
import math

from fbasis.reports import (
    CSV_FIELDS,
    ResidualReport,
    all_passed,
    summarize,
    to_csv,
    to_json,
)


def test_from_terms_relative_scale():
    r = ResidualReport.from_terms("x", [1.0, -1.0 + 1e-12], tol=1e-9)
    assert r.passed
    assert math.isclose(r.relative, 1e-12, rel_tol=1e-3)
    bad = ResidualReport.from_terms("x", [1.0, -0.5], tol=1e-9)
    assert not bad.passed and bad.relative == 0.5


def test_zero_scale_is_zero_relative():
    r = ResidualReport.from_values("x", 0.0, 0.0)
    assert r.relative == 0.0 and r.passed


def test_nan_fails():
    assert not ResidualReport.from_values("x", float("nan"), 1.0).passed


def test_advisory_does_not_fail():
    reports = [ResidualReport.from_values("a", 1.0, 1.0).as_advisory(), ResidualReport.from_values("b", 0.0, 1.0)]
    assert all_passed(reports)
    s = summarize(reports)
    assert s["failed"] == 0 and s["advisory_failed"] == 1


def test_failure_report():
    r = ResidualReport.failure("task", "boom")
    assert not r.passed and r.note == "boom"
    row = json.loads(to_json([r]))["reports"][0]
    assert row["absolute"] == "inf"


def test_json_schema_and_order():
    reports = [ResidualReport.from_values("b", 1e-12, 1.0, indices=(1, 2), arguments=("x", "y"))]
    text = to_json(reports, seed=3)
    doc = json.loads(text)
    assert doc["schema"] == 1 and doc["seed"] == 3
    assert list(doc) == sorted(doc)
    assert doc["summary"]["failing_relations"] == []
    assert text == to_json(reports, seed=3)


def test_csv_columns():
    reports = [ResidualReport.from_values("b", 1.0, 1.0, indices=(1, 2), note="n").as_advisory()]
    rows = list(csv.DictReader(io.StringIO(to_csv(reports))))
    assert list(rows[0]) == CSV_FIELDS
    assert rows[0]["indices"] == "1 2" and rows[0]["advisory"] == "True" and rows[0]["passed"] == "False"
