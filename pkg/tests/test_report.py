"""
Tests for the bound ledger and the report writers:

  - The config hash ignores key order and changes with any value.
  - An enforced failure fails the report; an unenforced one is recorded as info and does not.
  - Non-finite floats survive the JSON report as strings.
  - The error log has one banner per stage, in stage order, even for stages without errors.
  - Event frequencies carry the noise-norm reference rate on the F_n row only.
"""
import json
import math

from ewachain.report import (FAIL, INFO, PASS, SKIPPED, DiagnosticsReport, config_hash, judged, skipped,
                             write_error_log, write_event_frequencies)


def test_config_hash_is_canonical():
    first = config_hash({"p": 6, "chain": {"beta": 2.0, "D": None}})
    second = config_hash({"chain": {"D": None, "beta": 2.0}, "p": 6})
    assert first == second
    assert len(first) == 64
    assert config_hash({"p": 7, "chain": {"beta": 2.0, "D": None}}) != first


def test_verdicts():
    assert judged("gap", "", 1.0, 2.0, True).verdict == PASS
    failed = judged("gap", "", 3.0, 2.0, False)
    assert failed.verdict == FAIL and failed.failed
    info = judged("gap", "", 3.0, 2.0, False, enforced=False)
    assert info.verdict == INFO and not info.failed
    gone = skipped("oracle", "skipped: over cap")
    assert gone.verdict == SKIPPED and not gone.failed


def test_report_passes_without_enforced_failures(tmp_path):
    report = DiagnosticsReport("abc", 3, "0.1.0")
    report.add(judged("gap", "", 1.0, 2.0, True))
    report.add(judged("spectrum", "", math.inf, 1e-8, False, enforced=False))
    assert report.passed
    report.write_json(tmp_path / "report.json")
    payload = json.loads((tmp_path / "report.json").read_text())
    assert payload["passed"] and payload["seed"] == 3
    assert payload["ledger"][1]["measured"] == "inf"
    assert payload["ledger"][1]["verdict"] == INFO

    report.add(judged("ratio", "", -1.0, 0.0, False))
    assert not report.passed
    assert [entry.name for entry in report.failures] == ["ratio"]


def test_error_log_banners(tmp_path):
    path = tmp_path / "pipeline_errors.txt"
    write_error_log(path, {"gen": [], "paths": ["[U] fails for S={0}", "[stronger] fails for S={0}"]})
    lines = path.read_text().splitlines()
    assert lines == [
        "===============================",
        "gen Errors:",
        "===============================",
        "",
        "===============================",
        "paths Errors:",
        "===============================",
        "[U] fails for S={0}",
        "[stronger] fails for S={0}",
    ]


def test_event_frequencies(tmp_path):
    path = tmp_path / "event_frequencies.csv"
    write_event_frequencies(path, {"A_n": 2, "F_n": 1}, 2, 32)
    rows = [line.split(",") for line in path.read_text().splitlines()[1:]]
    assert [row[0] for row in rows] == ["A_n", "E_n", "F_n", "H_n"]
    assert rows[0][1:4] == ["2", "2", "1"]
    assert rows[1][1] == "0"
    assert rows[2][3] == "0.5"
    assert float(rows[2][4]) == math.exp(-0.17 * 32)
    assert rows[3][4] == ""
