"""
report.py

The bound ledger and the files a pipeline run leaves behind: one JSON report per seed, CSV
tables (sampler trace, TV curve, golden pi table, loadings, event frequencies), the G-tree as
DOT, and the pipeline error log. Column orders are fixed; see docs/formats.md.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

PASS, FAIL, SKIPPED, INFO = "pass", "fail", "skipped", "info"


def config_hash(payload):
    """sha256 of the canonical JSON form of a config dict."""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _plain(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "item"):
        return _plain(value.item())
    return value


@dataclass
class LedgerEntry:
    """
    One line of the bound ledger.

    Attributes:
        name (str): Short identifier of the checked inequality.
        reference (str): Where the inequality comes from, in words.
        measured: The measured side.
        threshold: The bound it is compared against.
        verdict (str): "pass", "fail", "skipped" or "info".
        enforced (bool): Whether a failure makes the run fail.
    """
    name: str
    reference: str
    measured: object
    threshold: object
    verdict: str
    enforced: bool = True
    note: str = ""

    @property
    def failed(self):
        return self.enforced and self.verdict == FAIL


def judged(name, reference, measured, threshold, holds, enforced=True, note=""):
    """Ledger entry whose verdict is `holds`; unenforced failures are recorded as info."""
    if holds:
        verdict = PASS
    else:
        verdict = FAIL if enforced else INFO
    return LedgerEntry(name, reference, measured, threshold, verdict, enforced, note)


def skipped(name, reason):
    return LedgerEntry(name, "", None, None, SKIPPED, enforced=False, note=reason)


@dataclass
class DiagnosticsReport:
    """Ledger plus free-form sections for one seed, stamped with config hash and version."""
    config_hash: str
    seed: int
    version: str
    entries: list = field(default_factory=list)
    sections: dict = field(default_factory=dict)

    def add(self, entry):
        self.entries.append(entry)
        return entry

    @property
    def failures(self):
        return [entry for entry in self.entries if entry.failed]

    @property
    def passed(self):
        return not self.failures

    def to_dict(self):
        return _plain({
            "config_hash": self.config_hash,
            "seed": self.seed,
            "version": self.version,
            "passed": self.passed,
            "ledger": [asdict(entry) for entry in self.entries],
            "sections": self.sections,
        })

    def write_json(self, path):
        write_json(path, self.to_dict())


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_rows(path, fields, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _g(value):
    return "%.17g" % value


def write_trace_csv(path, trace):
    rows = ({"step": k, "state": S.hex(), "size": S.size, "accepted": int(acc), "log_weight": _g(lw)}
            for k, (S, acc, lw) in enumerate(zip(trace.states, trace.accepts, trace.log_weights)))
    _write_rows(path, ["step", "state", "size", "accepted", "log_weight"], rows)


def write_tv_csv(path, curve, log_bounds):
    rows = ({"k": k, "tv": _g(tv), "log_bound": _g(lb)} for (k, tv), lb in zip(curve, log_bounds))
    _write_rows(path, ["k", "tv", "log_bound"], rows)


def write_golden_table(path, table):
    """Exact pi table: one row per state in ascending bit order, floats at full precision."""
    rows = ({"state": S.hex(), "size": S.size, "g": _g(table.g[i]), "m": _g(table.m[i]),
             "log_w": _g(table.log_w[i]), "log_pi": _g(table.log_pi[i])}
            for i, S in enumerate(table.states))
    _write_rows(path, ["state", "size", "g", "m", "log_w", "log_pi"], rows)


def write_loadings_csv(path, loadings):
    rows = ({"from": a.hex(), "to": b.hex(), "child": load.child.hex(), "log_q": _g(load.log_q),
             "log_rho": _g(load.log_rho), "log_lambda_mass": _g(load.log_lambda_mass),
             "log_analytic": _g(load.log_analytic), "within_bound": int(load.within_bound)}
            for load in loadings for a, b in [load.edge])
    _write_rows(path, ["from", "to", "child", "log_q", "log_rho", "log_lambda_mass", "log_analytic", "within_bound"], rows)


def write_event_frequencies(path, counts, runs, n):
    """Counts and rates of each event over `runs` seeds; F_n carries the exp(-0.17 n) reference."""
    rows = []
    for event in ("A_n", "E_n", "F_n", "H_n"):
        hits = counts.get(event, 0)
        rows.append({"event": event, "holds": hits, "runs": runs,
                     "rate": _g(hits / runs) if runs else "nan",
                     "reference_failure_rate": _g(math.exp(-0.17 * n)) if event == "F_n" else ""})
    _write_rows(path, ["event", "holds", "runs", "rate", "reference_failure_rate"], rows)


def write_dot(path, tree):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(tree.to_dot(), encoding="utf-8")


def write_error_log(path, errors_by_stage):
    """One banner section per pipeline stage, listing the errors it collected."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for i, (stage, errors) in enumerate(errors_by_stage.items()):
            if i:
                f.write("\n")
            f.write("===============================\n")
            f.write(f"{stage} Errors:\n")
            f.write("===============================\n")
            for error in errors or []:
                f.write(error + "\n")
