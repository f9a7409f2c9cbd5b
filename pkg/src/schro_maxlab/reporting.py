"""CSV and JSON writers for experiment results."""

from __future__ import annotations

import csv
import io
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np


def format_cell(v) -> str:
    """Lossless text for one CSV cell; floats use the shortest round-trip repr."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def csv_body(columns: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells, expected {len(columns)}")
        w.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path: Path, title: str, columns: list[str], rows) -> Path:
    """Write a comment line ``# <title> generated <UTC time>`` followed by an RFC 4180 table."""
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {title} generated {stamp}\r\n")
        fh.write(csv_body(columns, rows))
    return path


def read_csv_body(path: Path) -> str:
    """Everything after the timestamp line, line endings untouched."""
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    first, _, rest = text.partition("\r\n")
    return rest if first.startswith("#") else text


def read_csv_rows(path: Path) -> list[list[str]]:
    """Header plus data rows as strings."""
    return list(csv.reader(io.StringIO(read_csv_body(path), newline="")))


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for strict JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    return path
