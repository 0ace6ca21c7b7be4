"""Fixed-precision serialization helpers.

All real numbers written to disk (CSV cells, JSON values) use 17
significant digits, which is enough for a lossless float64 round trip.
The JSON encoder here is a small hand-rolled one because the stdlib
``json`` module offers no control over float formatting.
"""

from __future__ import annotations

import json
import math

import numpy as np

__all__ = ["format_real", "dumps", "loads", "write_matrix", "read_matrix"]


def format_real(x: float) -> str:
    """Format a real with 17 significant digits (float64 round-trip safe)."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    return format(x, ".17g")


def _encode(obj, out: list) -> None:
    if isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if not isinstance(k, str):
                raise TypeError(f"JSON object keys must be strings, got {k!r}")
            if i:
                out.append(", ")
            out.append(json.dumps(k))
            out.append(": ")
            _encode(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _encode(v, out)
        out.append("]")
    elif isinstance(obj, np.ndarray):
        _encode(obj.tolist(), out)
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_real(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif obj is None:
        out.append("null")
    else:
        raise TypeError(f"cannot serialize object of type {type(obj).__name__}")


def dumps(obj) -> str:
    """Serialize to a JSON string with 17-significant-digit reals."""
    parts: list = []
    _encode(obj, parts)
    return "".join(parts)


def loads(text: str):
    return json.loads(text)


def write_matrix(path, M: np.ndarray) -> None:
    """Write a 2-D array as headerless CSV, one row per line."""
    M = np.asarray(M, dtype=float)
    with open(path, "w") as fh:
        for row in M:
            fh.write(",".join(format_real(v) for v in row))
            fh.write("\n")


def read_matrix(path, n_cols: int | None = None) -> np.ndarray:
    """Read a headerless CSV of reals into a 2-D float64 array.

    Parse errors report the offending file and 1-based line number.
    ``n_cols`` disambiguates the column count for empty files.
    """
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            try:
                row = [float(c) for c in cells]
            except ValueError as exc:
                raise ValueError(f"{path}, line {lineno}: non-numeric cell ({exc})") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(
                    f"{path}, line {lineno}: expected {width} columns, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        return np.zeros((0, n_cols if n_cols is not None else 0))
    return np.array(rows, dtype=float)
