"""Line-delimited JSON records with exact 64-bit float text.

Floats are written with 17 significant digits so every value reads back
bit-for-bit; everything else follows plain JSON.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List

import numpy as np

from relaynet.errors import RecordError

SCHEMA_VERSION = 1


def _encode(obj: Any) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise RecordError(f"non-finite value {x!r} cannot be serialized")
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}:{_encode(v)}" for k, v in obj.items())
        return "{" + ",".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    raise RecordError(f"cannot serialize {type(obj).__name__}")


def encode_record(record: Dict[str, Any]) -> str:
    return _encode(record)


def decode_record(line: str, *, where: str = "<record>") -> Dict[str, Any]:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise RecordError(f"{where}: malformed record: {e}") from e
    if not isinstance(record, dict):
        raise RecordError(f"{where}: record is not an object")
    version = record.get("schema")
    if version != SCHEMA_VERSION:
        raise RecordError(f"{where}: unsupported schema version {version!r}")
    return record


def write_records(path: str | Path, records: Iterable[Dict[str, Any]], *, append=False):
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(encode_record(record))
            f.write("\n")


def iter_records(path: str | Path) -> Iterator[Dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            yield decode_record(line, where=f"{path}:{lineno}")


def read_records(path: str | Path) -> List[Dict[str, Any]]:
    return list(iter_records(path))


def require(record: Dict[str, Any], *keys: str) -> None:
    missing = [k for k in keys if k not in record]
    if missing:
        raise RecordError(f"record is missing fields: {', '.join(missing)}")
