"""CSV / JSON writers with a provenance header and 17 significant digits."""
from __future__ import annotations

import json
import math
import sys
from typing import IO, Iterable, Sequence

import numpy as np

__all__ = ["fmt", "provenance", "write_csv", "write_json", "to_jsonable", "version", "open_out"]


def version() -> str:
    try:
        from importlib.metadata import version as _v
        return _v("artifact")
    except Exception:  # pragma: no cover - not installed
        from . import __version__
        return __version__


def fmt(x) -> str:
    """Round-trip formatting: 17 significant digits, nan/inf spelled out."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def to_jsonable(obj):
    """Plain JSON types; floats stay floats (json writes repr, which round-trips)."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def provenance(command: str, config: dict) -> dict:
    return {"command": command, "version": version(), "config": to_jsonable(config)}


def write_csv(stream: IO, header: Sequence[str], rows: Iterable[Sequence], prov: dict) -> None:
    stream.write(f"# command: {prov['command']}\n")
    stream.write(f"# version: {prov['version']}\n")
    stream.write("# config: " + json.dumps(prov["config"], sort_keys=True) + "\n")
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(fmt(v) for v in row) + "\n")


def write_json(stream: IO, payload: dict, prov: dict) -> None:
    doc = {"provenance": prov}
    doc.update(to_jsonable(payload))
    json.dump(doc, stream, indent=2, sort_keys=True, allow_nan=False)
    stream.write("\n")


def open_out(path):
    if path in (None, "-"):
        return _NoClose(sys.stdout)
    return open(path, "w", encoding="utf-8", newline="")


class _NoClose:
    def __init__(self, s):
        self._s = s

    def __enter__(self):
        return self._s

    def __exit__(self, *exc):
        self._s.flush()
        return False
