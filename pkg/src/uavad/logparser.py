"""Parser and serializer for the dataflash text-log format and annotations.

The text format is self-describing: FMT lines register a message schema,

    FMT, <id>, <len>, <Name>, <fmtchars>, Col1,Col2,...

and subsequent ``<Name>, v1, v2, ...`` lines become records.  Tokens are
comma-separated with optional surrounding whitespace.  The first column of
every schema must be TimeUS; timestamps parse as integers, all other values
as decimal reals.  ``fmtchars`` is preserved but not interpreted.

Annotations are a JSON array of
``{"log": str, "type": <anomaly type>, "start_us": int, "end_us": int}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import (
    ArityMismatch,
    BadJson,
    InvertedSpan,
    MalformedFmt,
    MalformedRecord,
    NonMonotonicTime,
    UnknownAnomalyType,
    UnknownMessage,
)
from .logdata import AnnotationSpan, AnomalyType, FlightLog


@dataclass
class ParseReport:
    """Line accounting for one parse: parsed + skipped == lines processed."""

    parsed_lines: int = 0
    skipped_lines: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)


def parse_log(text: str, strict: bool = False, log_id: str = "") -> tuple[FlightLog, ParseReport]:
    """Parse dataflash text.

    In lenient mode unknown or malformed lines are skipped and recorded in
    the report (never raises); in strict mode the first offending line
    raises the matching ParseError subclass.
    """
    schemas: dict[str, list[str]] = {}
    rows: dict[str, list[tuple[int, tuple[float, ...]]]] = {}
    last_time: dict[str, int] = {}
    report = ParseReport()

    def bad(exc_cls, lineno: int, message: str):
        if strict:
            raise exc_cls(lineno, message)
        report.skipped_lines += 1
        report.errors.append((lineno, message))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = [tok.strip() for tok in line.split(",")]
        name = tokens[0]
        if name == "FMT":
            if len(tokens) < 6:
                bad(MalformedFmt, lineno, "FMT line needs id, len, name, fmtchars, columns")
                continue
            try:
                int(tokens[1]), int(tokens[2])
            except ValueError:
                bad(MalformedFmt, lineno, "FMT id and len must be integers")
                continue
            msg_name, columns = tokens[3], tokens[5:]
            if not msg_name or any(not c for c in columns):
                bad(MalformedFmt, lineno, "FMT message and column names must be non-empty")
                continue
            if columns[0] != "TimeUS":
                bad(MalformedFmt, lineno, "first column must be TimeUS")
                continue
            if msg_name in schemas:
                bad(MalformedFmt, lineno, f"duplicate FMT for {msg_name}")
                continue
            schemas[msg_name] = columns
            rows[msg_name] = []
            report.parsed_lines += 1
            continue
        if name not in schemas:
            bad(UnknownMessage, lineno, f"data line for unregistered message {name!r}")
            continue
        cols = schemas[name]
        if len(tokens) != 1 + len(cols):
            bad(ArityMismatch, lineno,
                f"{name} expects {len(cols)} values, got {len(tokens) - 1}")
            continue
        try:
            t = int(tokens[1])
            vals = tuple(float(tok) for tok in tokens[2:])
        except ValueError:
            bad(MalformedRecord, lineno, f"non-numeric value in {name} record")
            continue
        if t < last_time.get(name, t):
            bad(NonMonotonicTime, lineno,
                f"{name} timestamp {t} precedes previous {last_time[name]}")
            continue
        last_time[name] = t
        rows[name].append((t, vals))
        report.parsed_lines += 1

    return FlightLog.from_rows(log_id, schemas, rows), report


def _format_value(v: float) -> str:
    # repr gives the shortest decimal that round-trips to the same float64
    return repr(float(v))


def serialize_log(log: FlightLog) -> str:
    """Emit FMT lines then all data lines in global timestamp order.

    The merge is stable, so records of each message keep their order;
    parse_log(serialize_log(x), strict=True) reproduces x exactly.
    """
    lines = []
    for i, (name, cols) in enumerate(log.schemas.items(), start=1):
        fmtchars = "Q" + "f" * (len(cols) - 1)
        lines.append(f"FMT, {i}, 0, {name}, {fmtchars}, {','.join(cols)}")
    merged: list[tuple[int, str, tuple[float, ...]]] = []
    for name in log.schemas:
        for t, vals in log.iter_rows(name):
            merged.append((t, name, vals))
    merged.sort(key=lambda rec: rec[0])
    for t, name, vals in merged:
        parts = [name, str(t)] + [_format_value(v) for v in vals]
        lines.append(", ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def load_annotations(text: str) -> list[AnnotationSpan]:
    """Parse the annotation JSON format into AnnotationSpans."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadJson(f"annotation file is not valid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise BadJson("annotation file must be a JSON array")
    spans = []
    for i, item in enumerate(doc):
        if not isinstance(item, dict):
            raise BadJson(f"annotation #{i} is not an object")
        try:
            log_id = item["log"]
            type_name = item["type"]
            start_us = int(item["start_us"])
            end_us = int(item["end_us"])
        except (KeyError, TypeError, ValueError) as exc:
            raise BadJson(f"annotation #{i} missing or malformed fields: {exc}") from exc
        try:
            anomaly_type = AnomalyType.from_name(type_name)
        except KeyError:
            raise UnknownAnomalyType(f"annotation #{i}: unknown type {type_name!r}") from None
        if start_us >= end_us:
            raise InvertedSpan(f"annotation #{i}: start_us {start_us} >= end_us {end_us}")
        spans.append(AnnotationSpan(log_id, anomaly_type, start_us, end_us))
    return spans


def serialize_annotations(spans: list[AnnotationSpan]) -> str:
    """Inverse of load_annotations; deterministic output."""
    items = [
        {
            "log": s.log_id,
            "type": s.anomaly_type.value,
            "start_us": s.start_us,
            "end_us": s.end_us,
        }
        for s in spans
    ]
    return json.dumps(items, indent=2, sort_keys=True) + "\n"
