"""Deterministic CSV/JSON serialization helpers.

All numeric output is written with 9 significant digits and JSON keys are
sorted, so identical inputs always produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataFormatError


def fmt_float(x: float) -> str:
    """Format a real number with 9 significant digits (negative zero normalized)."""
    x = float(x)
    if x == 0.0:
        x = 0.0
    return format(x, ".9g")


def _round_sig(x: float) -> float | None:
    if math.isnan(x):
        return None
    if math.isinf(x):
        return x
    return float(fmt_float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round_sig(float(obj))
    return obj


def canonical_json(obj) -> str:
    """Render ``obj`` as JSON with sorted keys and 9-significant-digit floats."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(canonical_json(obj))


def write_csv(path: str | Path, rows: Iterable[Sequence], header: Sequence[str] | None = None) -> None:
    """Write rows to CSV, formatting real-valued cells with 9 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header is not None:
            writer.writerow(header)
        for row in rows:
            writer.writerow([fmt_float(c) if isinstance(c, (float, np.floating)) else c for c in row])


def _is_numeric(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_numeric_csv(path: str | Path, expect_cols: int | None = None) -> np.ndarray:
    """Read a dense numeric CSV, auto-detecting and skipping a header row.

    Raises DataFormatError for ragged rows, unparseable or non-finite cells,
    or a column count differing from ``expect_cols``.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        raw = list(csv.reader(fh))
    raw = [row for row in raw if row]
    if not raw:
        raise DataFormatError(f"{path}: empty file")
    start = 0
    if any(not _is_numeric(c) for c in raw[0]):
        start = 1
        if len(raw) == 1:
            raise DataFormatError(f"{path}: header only, no data rows")
    width = len(raw[start])
    if expect_cols is not None and width != expect_cols:
        raise DataFormatError(f"{path}: expected {expect_cols} columns, found {width}")
    out = np.empty((len(raw) - start, width))
    for i, row in enumerate(raw[start:]):
        line_no = start + i + 1
        if len(row) != width:
            raise DataFormatError(f"{path}: line {line_no} has {len(row)} cells, expected {width}")
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DataFormatError(f"{path}: line {line_no} cell {c + 1} is not numeric: {cell!r}") from None
            if not math.isfinite(v):
                raise DataFormatError(f"{path}: line {line_no} cell {c + 1} is not finite: {cell!r}")
            out[i, c] = v
    return out
