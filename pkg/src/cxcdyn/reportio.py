"""Deterministic report serialization: stable field order, rationals as
"p/q" strings, floats at 12 significant digits, byte-identical reruns."""

from __future__ import annotations

import io
import json
import sys
from fractions import Fraction
from pathlib import Path

SCHEMA_VERSION = "v1"


def canonical(value):
    """Recursively normalize a report value for serialization."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            return repr(value)
        return float(f"{value:.12g}")
    if isinstance(value, dict):
        return {str(k): canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [canonical(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted(canonical(v) for v in value)
    if hasattr(value, "__dataclass_fields__"):
        return {k: canonical(getattr(value, k))
                for k in value.__dataclass_fields__}
    if isinstance(value, (str, int, bool)) or value is None:
        return value
    return str(value)


def render_json(report: dict) -> str:
    body = {"schema": SCHEMA_VERSION}
    body.update(canonical(report))
    return json.dumps(body, indent=2) + "\n"


def render_csv(rows: list[dict]) -> str:
    if not rows:
        return "\n"
    buf = io.StringIO()
    keys = list(rows[0])
    buf.write(",".join(keys) + "\n")
    for r in rows:
        buf.write(",".join(_csv_cell(canonical(r.get(k))) for k in keys) + "\n")
    return buf.getvalue()


def _csv_cell(v) -> str:
    if isinstance(v, (list, dict)):
        return json.dumps(v).replace(",", ";")
    return str(v)


def report_writer(report, fmt: str = "json", path: str | None = None) -> str:
    """Serialize and either write to ``path`` or return for stdout."""
    if fmt == "json":
        text = render_json(report)
    elif fmt == "csv":
        rows = report.get("rows") if isinstance(report, dict) else report
        if rows is None:
            raise ValueError("csv output needs a report with a 'rows' table")
        text = render_csv(rows)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path:
        Path(path).write_text(text)
    return text
