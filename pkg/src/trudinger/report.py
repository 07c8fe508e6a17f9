"""Deterministic JSON/CSV serialisation of reports.

JSON output has sorted keys, two-space indentation and floats written with
17 significant digits, so equal reports give byte-identical files and
floats survive a parse round trip exactly.
"""

import csv
import dataclasses
import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgument

CSV_SCHEMAS = {
    "solution": ("step", "time", "node", "x", "value"),
    "squeeze": ("gamma", "gap"),
    "trace": ("tau", "xi"),
    "convergence": ("mt", "n", "error", "reduction"),
}


@dataclass(frozen=True)
class Table:
    """Rows for one of the CSV schemas."""

    schema: str
    rows: tuple

    def __post_init__(self):
        if self.schema not in CSV_SCHEMAS:
            raise InvalidArgument(f"unknown CSV schema {self.schema!r}")
        width = len(CSV_SCHEMAS[self.schema])
        rows = tuple(tuple(r) for r in self.rows)
        for r in rows:
            if len(r) != width:
                raise InvalidArgument(f"{self.schema} rows need {width} columns, got {len(r)}")
        object.__setattr__(self, "rows", rows)

    @property
    def columns(self):
        return CSV_SCHEMAS[self.schema]


def format_float(v):
    v = float(v)
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    s = format(v, ".17g")
    return s if any(c in s for c in ".en") else s + ".0"


def to_plain(obj):
    """Reduce dataclasses, numpy values and tuples to JSON-like Python values."""
    if hasattr(obj, "to_dict"):
        return to_plain(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_plain(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise InvalidArgument(f"cannot serialise value of type {type(obj).__name__}")


def _write(v, out, level):
    pad = "  " * (level + 1)
    if isinstance(v, dict):
        if not v:
            out.append("{}")
            return
        out.append("{\n")
        for i, key in enumerate(sorted(v)):
            out.append(f"{pad}{json.dumps(key)}: ")
            _write(v[key], out, level + 1)
            out.append(",\n" if i < len(v) - 1 else "\n")
        out.append("  " * level + "}")
    elif isinstance(v, list):
        if not v:
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(v):
            out.append(pad)
            _write(item, out, level + 1)
            out.append(",\n" if i < len(v) - 1 else "\n")
        out.append("  " * level + "]")
    elif isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        out.append(json.dumps(v))
    else:
        out.append(format_float(v))


def dumps(report):
    out = []
    _write(to_plain(report), out, 0)
    return "".join(out) + "\n"


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def table_text(table):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def emit_report(report, fmt, path):
    """Write ``report`` as JSON, or a ``Table`` as CSV, to ``path``."""
    if fmt == "json":
        text = dumps(report)
    elif fmt == "csv":
        if not isinstance(report, Table):
            raise InvalidArgument("CSV output needs a Table")
        text = table_text(report)
    else:
        raise InvalidArgument(f"unknown format {fmt!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def sha256_of(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
