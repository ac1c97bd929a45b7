"""Stable JSON reading/writing shared by every on-disk artifact.

All files are UTF-8, keys sorted, two-space indented, newline-terminated so
that repeated runs with identical inputs produce byte-identical output.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any


class SchemaError(ValueError):
    """A JSON document failed validation; names the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


def dumps_stable(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def write_json(path: Path | str, obj: Any) -> None:
    """Atomically write *obj* as stable JSON (write-new-then-rename)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps_stable(obj), encoding="utf-8")
    os.replace(tmp, path)


def read_json(path: Path | str) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IOError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(str(path), f"invalid JSON: {exc}") from exc


def require(doc: dict, field: str, kind: type | tuple[type, ...], *, ctx: str = "") -> Any:
    """Fetch a required field, raising SchemaError with its dotted path."""
    path = f"{ctx}.{field}" if ctx else field
    if not isinstance(doc, dict):
        raise SchemaError(ctx or field, f"expected object, got {type(doc).__name__}")
    if field not in doc:
        raise SchemaError(path, "missing required field")
    value = doc[field]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind in (int, float):
        raise SchemaError(path, f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
    return value
