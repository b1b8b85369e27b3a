"""Tabular result records and their CSV/JSON emitters.

Numbers are written with 12 significant digits in both formats, so a CSV
and a JSON emission of the same records carry identical values.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Mapping

DIGITS = 12


def format_number(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return format(x, f".{DIGITS}g")
    return "" if x is None else str(x)


def _json_value(x):
    if isinstance(x, float) and math.isfinite(x):
        return float(format(x, f".{DIGITS}g"))
    if isinstance(x, float):
        return format_number(x)
    return x


def _columns(records: list[Mapping]) -> list[str]:
    cols: list[str] = []
    for r in records:
        for k in r:
            if k not in cols:
                cols.append(k)
    return cols


def to_csv(records: Iterable[Mapping]) -> str:
    records = list(records)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = _columns(records)
    w.writerow(cols)
    for r in records:
        w.writerow([format_number(r.get(c)) for c in cols])
    return buf.getvalue()


def to_json(records: Iterable[Mapping], errors: Iterable[Mapping] = ()) -> str:
    doc = {"records": [{k: _json_value(v) for k, v in r.items()} for r in records]}
    errors = list(errors)
    if errors:
        doc["errors"] = errors
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def emit(records: Iterable[Mapping], fmt: str = "csv", errors: Iterable[Mapping] = ()) -> str:
    if fmt == "csv":
        return to_csv(records)
    if fmt == "json":
        return to_json(records, errors)
    raise ValueError(f"unknown format {fmt!r}")


def read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))
