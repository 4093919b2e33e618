"""Bit-stable CSV/JSON emission of homogeneous row tables."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Sequence

FORMATS = ("csv", "json")


def format_value(v) -> str:
    """CSV field: ints as plain integers, floats with 17 significant digits."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".16e")
    if hasattr(v, "item"):  # numpy scalar
        return format_value(v.item())
    return str(v)


def parse_value(s: str):
    """Inverse of :func:`format_value` for numeric fields; other text is returned as is."""
    if s == "":
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def _json_value(v):
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def render_table(rows: Sequence[dict], columns: Sequence[str], fmt: str = "csv") -> str:
    """Serialize ``rows`` with keys in ``columns`` order.

    Every row must carry exactly the listed columns. JSON output is a list of
    objects whose keys follow ``columns``; non-finite floats become ``null``
    (NaN) or the strings ``"inf"``/``"-inf"``.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    cols = list(columns)
    for r in rows:
        if set(r) != set(cols):
            raise ValueError(f"inhomogeneous row: {sorted(set(r) ^ set(cols))}")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([format_value(r[c]) for c in cols])
        return buf.getvalue()
    objs = [{c: _json_value(r[c]) for c in cols} for r in rows]
    return json.dumps(objs, indent=1, allow_nan=False) + "\n"


def atomic_write(path, text: str) -> Path:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def emit_table(rows: Sequence[dict], columns: Sequence[str], path, fmt: str = "csv") -> Path:
    return atomic_write(path, render_table(rows, columns, fmt))


def read_table(path) -> list[dict]:
    """Read a table written by :func:`emit_table` (format from the suffix)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        out = json.loads(text)
        for r in out:
            for k, v in r.items():
                if v is None:
                    r[k] = math.nan
                elif v in ("inf", "-inf"):
                    r[k] = float(v)
        return out
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return [dict(zip(header, (parse_value(x) for x in row))) for row in reader]

