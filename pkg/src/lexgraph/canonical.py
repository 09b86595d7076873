"""Canonical serialization: sorted keys, compact separators, UTF-8, ISO dates.

Logs, goldens and transport bodies are compared byte-for-byte, so every
result leaving the engine goes through :func:`canonical_bytes`.
"""

from __future__ import annotations

import hashlib
import json
from datetime import date, datetime
from enum import Enum
from typing import Any, Mapping

HASH_ALGORITHM = "sha256"


def to_jsonable(obj: Any) -> Any:
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            raise ValueError("non-finite float in canonical value")
        return obj
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, datetime):
        from .model import format_instant

        return format_instant(obj)
    if isinstance(obj, date):
        return obj.isoformat()
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(
        to_jsonable(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    )


def canonical_bytes(obj: Any) -> bytes:
    return dumps(obj).encode("utf-8")


def digest(data: Any) -> str:
    if not isinstance(data, (bytes, bytearray)):
        data = canonical_bytes(data)
    return hashlib.sha256(data).hexdigest()
