"""
Serialization Module

Line-delimited JSON records with bit-exact floats. Every float is written
with 17 significant digits, which round-trips IEEE doubles exactly.
"""

import json
import math
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from .exceptions import DatasetParseError


def format_float(value: float) -> str:
    """Render a finite float with 17 significant digits."""
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"cannot serialize non-finite value {value!r}")
    text = format(value, ".17g")
    # Keep integral values recognisable as floats
    if "." not in text and "e" not in text:
        text += ".0"
    return text


def dumps(obj: Any) -> str:
    """
    Encode an object as compact JSON with exact floats.

    Handles dicts, lists, tuples, numpy arrays and scalars, str, int, bool, None.
    """
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist())
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(key))}:{dumps(value)}" for key, value in obj.items())
        return "{" + ",".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps(item) for item in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_records(path: str | Path, records: list[Any]) -> None:
    """Write one JSON record per line."""
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(dumps(record))
            f.write("\n")


def iter_records(path: str | Path) -> Iterator[tuple[int, Any]]:
    """
    Yield (line_number, record) pairs, 1-based.

    Raises:
        DatasetParseError: On an unreadable file, invalid UTF-8 or malformed
            JSON, naming the line where known
    """
    try:
        f = open(path, "rb")
    except OSError as e:
        raise DatasetParseError(f"cannot read {path}: {e.strerror or e}") from e
    with f:
        for number, raw in enumerate(f, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise DatasetParseError(f"not valid UTF-8 text ({e.reason})", line=number) from e
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetParseError(f"malformed record ({e.msg})", line=number) from e
            yield number, record
