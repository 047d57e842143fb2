"""Experiment reports and their self-describing text record.

Layout of a persisted report::

    sublinear-report <version>
    experiment = <name>
    config_hash = <sha256>
    [config]
    ...serialized config...
    [table]
    experiment,horizon,strategy,function,statistic,value,stderr
    ...
    [verdicts]
    name,status,value,threshold
    ...
    [notes]
    ...
    checksum = <sha256 of every preceding line>
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field

REPORT_VERSION = "1"
_MAGIC = "sublinear-report"
TABLE_COLUMNS = ("experiment", "horizon", "strategy", "function", "statistic", "value", "stderr")
STATUSES = ("pass", "fail", "inconclusive", "hypotheses_not_met", "exploratory")


class ReportFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Row:
    experiment: str
    horizon: str
    strategy: str
    function: str
    statistic: str
    value: float
    stderr: float | None = None


@dataclass(frozen=True)
class Verdict:
    name: str
    status: str
    value: float
    threshold: float | None = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown verdict status {self.status!r}")


@dataclass(frozen=True)
class ExperimentReport:
    experiment: str
    config_text: str
    config_hash: str
    rows: tuple[Row, ...]
    verdicts: tuple[Verdict, ...]
    notes: tuple[str, ...] = field(default=())

    def select(self, statistic: str | None = None, **match) -> list[Row]:
        out = []
        for r in self.rows:
            if statistic is not None and r.statistic != statistic:
                continue
            if all(getattr(r, k) == v for k, v in match.items()):
                out.append(r)
        return out

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def status(self) -> str:
        """fail beats inconclusive beats pass; exploratory verdicts never count."""
        counted = [v.status for v in self.verdicts if v.status != "exploratory"]
        if "fail" in counted:
            return "fail"
        if "inconclusive" in counted or "hypotheses_not_met" in counted:
            return "inconclusive"
        return "pass"

    def summary(self) -> str:
        lines = [f"{self.experiment}: {self.status}"]
        for v in self.verdicts:
            thr = "" if v.threshold is None else f" (threshold {v.threshold:.6g})"
            lines.append(f"  {v.name}: {v.status} value={v.value:.6g}{thr}")
        lines.extend(f"  note: {n}" for n in self.notes)
        return "\n".join(lines)


def _fmt(x: float | None) -> str:
    if x is None:
        return ""
    return f"{x:.17e}" if math.isfinite(x) else repr(float(x))


def _num(s: str) -> float | None:
    return None if s == "" else float(s)


def table_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for r in rows:
        w.writerow([r.experiment, r.horizon, r.strategy, r.function, r.statistic,
                    _fmt(r.value), _fmt(r.stderr)])
    return buf.getvalue()


def export_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(table_csv(report.rows))


def render(report: ExperimentReport) -> str:
    buf = io.StringIO()
    buf.write(f"{_MAGIC} {REPORT_VERSION}\n")
    buf.write(f"experiment = {report.experiment}\n")
    buf.write(f"config_hash = {report.config_hash}\n")
    buf.write("[config]\n")
    buf.write(report.config_text if report.config_text.endswith("\n") else report.config_text + "\n")
    buf.write("[table]\n")
    buf.write(table_csv(report.rows))
    buf.write("[verdicts]\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("name", "status", "value", "threshold"))
    for v in report.verdicts:
        w.writerow((v.name, v.status, _fmt(v.value), _fmt(v.threshold)))
    buf.write("[notes]\n")
    for n in report.notes:
        buf.write(n.replace("\n", " ") + "\n")
    body = buf.getvalue()
    return body + f"checksum = {hashlib.sha256(body.encode()).hexdigest()}\n"


def report_hash(report: ExperimentReport) -> str:
    return hashlib.sha256(render(report).encode()).hexdigest()


def persist(report: ExperimentReport, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(render(report))


def parse_report(text: str) -> ExperimentReport:
    lines = text.splitlines(keepends=True)
    if not lines:
        raise ReportFormatError("empty report")
    head = lines[0].split()
    if len(head) != 2 or head[0] != _MAGIC:
        raise ReportFormatError("not a sublinear report")
    if head[1] != REPORT_VERSION:
        raise ReportFormatError(
            f"report version mismatch: file has {head[1]}, reader expects {REPORT_VERSION}"
        )
    last = lines[-1].strip()
    if not last.startswith("checksum = "):
        raise ReportFormatError("missing checksum")
    body = "".join(lines[:-1])
    if hashlib.sha256(body.encode()).hexdigest() != last.split("=", 1)[1].strip():
        raise ReportFormatError("checksum mismatch: report is corrupted")

    def header(i, key):
        k, _, v = lines[i].rstrip("\n").partition(" = ")
        if k != key:
            raise ReportFormatError(f"expected {key!r} on line {i + 1}")
        return v

    experiment = header(1, "experiment")
    chash = header(2, "config_hash")
    marks = {}
    for i, ln in enumerate(lines[:-1]):
        if ln.rstrip("\n") in ("[config]", "[table]", "[verdicts]", "[notes]") and ln.rstrip("\n") not in marks:
            marks[ln.rstrip("\n")] = i
    try:
        c0, t0, v0, n0 = (marks[k] for k in ("[config]", "[table]", "[verdicts]", "[notes]"))
    except KeyError as exc:
        raise ReportFormatError(f"missing section {exc}") from None
    config_text = "".join(lines[c0 + 1:t0])
    table = list(csv.reader(io.StringIO("".join(lines[t0 + 1:v0]))))
    if not table or tuple(table[0]) != TABLE_COLUMNS:
        raise ReportFormatError("bad table header")
    rows = tuple(Row(e, h, s, f, st, float(v), _num(se)) for e, h, s, f, st, v, se in table[1:])
    vt = list(csv.reader(io.StringIO("".join(lines[v0 + 1:n0]))))
    verdicts = tuple(Verdict(n, s, float(v), _num(t)) for n, s, v, t in vt[1:])
    notes = tuple(ln.rstrip("\n") for ln in lines[n0 + 1:-1])
    return ExperimentReport(experiment, config_text, chash, rows, verdicts, notes)


def load(path) -> ExperimentReport:
    with open(path, newline="") as fh:
        return parse_report(fh.read())
