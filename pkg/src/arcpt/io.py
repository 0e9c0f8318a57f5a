"""Reading series from CSV or JSON files and writing JSON results."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


class InputFormatError(ValueError):
    """The file exists but does not hold a single finite numeric series."""


def _parse_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise InputFormatError(f"{where}: not a number: {text!r}") from None


def read_series(path) -> np.ndarray:
    """Load a series from a one-column CSV (optional header) or a JSON file.

    JSON may be a bare list or an object with a ``values`` list. Raises
    ``OSError`` when the file cannot be read and :class:`InputFormatError`
    on malformed or non-finite content.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputFormatError(f"{path}: invalid JSON: {exc}") from None
        if isinstance(data, dict):
            data = data.get("values")
        if not isinstance(data, list):
            raise InputFormatError(f"{path}: expected a list of numbers or an object with 'values'")
        values = [_parse_float(str(v), f"{path}[{i}]") for i, v in enumerate(data)]
    else:
        rows = [r for r in csv.reader(text.splitlines()) if r and any(c.strip() for c in r)]
        if rows and len(rows[0]) == 1:
            try:
                float(rows[0][0])
            except ValueError:
                rows = rows[1:]  # header
        values = []
        for i, row in enumerate(rows, start=1):
            if len(row) != 1:
                raise InputFormatError(f"{path}:{i}: expected one column, got {len(row)}")
            values.append(_parse_float(row[0].strip(), f"{path}:{i}"))
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise InputFormatError(f"{path}: need at least two observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InputFormatError(f"{path}: series contains non-finite values")
    return x


def write_series(x, path) -> None:
    """One value per line with a ``value`` header, full float precision."""
    with open(path, "w", newline="") as fh:
        fh.write("value\n")
        for v in np.asarray(x, dtype=float):
            fh.write(f"{float(v)!r}\n")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
