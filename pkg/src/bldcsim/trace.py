"""Trace CSV writer/reader.

Floats are written with ``repr`` so a read-back gives the same doubles.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, List, Sequence

from .engine import TRACE_FIELDS, TraceRecord

_BOOL_FIELDS = {"zcd_a", "zcd_b", "zcd_c"}
_INT_FIELDS = {"sector"}
_STR_FIELDS = {"mode"}


def _cell(name: str, value) -> str:
    if name in _BOOL_FIELDS:
        return "1" if value else "0"
    if name in _INT_FIELDS or name in _STR_FIELDS:
        return str(value)
    return repr(float(value))


def trace_to_csv(trace: Iterable[TraceRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_FIELDS)
    for rec in trace:
        w.writerow([_cell(name, getattr(rec, name)) for name in TRACE_FIELDS])
    return buf.getvalue()


def write_trace(trace: Sequence[TraceRecord], path) -> None:
    text = trace_to_csv(trace)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc.strerror or exc}") from exc


def _parse_row(row: dict) -> TraceRecord:
    values = {}
    for name in TRACE_FIELDS:
        raw = row[name]
        if name in _BOOL_FIELDS:
            values[name] = raw == "1"
        elif name in _INT_FIELDS:
            values[name] = int(raw)
        elif name in _STR_FIELDS:
            values[name] = raw
        else:
            values[name] = float(raw)
    return TraceRecord(**values)


def read_trace(path) -> List[TraceRecord]:
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != TRACE_FIELDS:
        raise ValueError(f"{path}: header does not match the trace columns")
    return [_parse_row(row) for row in reader]
