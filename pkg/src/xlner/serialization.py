"""Versioned binary container: magic line, JSON header, raw little-endian arrays."""
from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any

import numpy as np

MAGIC = b"xlner-model\n"
VERSION = 1


def dump(path: str | Path, kind: str, meta: dict[str, Any], arrays: dict[str, np.ndarray]) -> None:
    names = sorted(arrays)
    header = {
        "version": VERSION,
        "kind": kind,
        "meta": meta,
        "arrays": [{"name": k, "dtype": "<f8", "shape": list(np.shape(arrays[k]))} for k in names],
    }
    blob = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for k in names:
            fh.write(np.ascontiguousarray(arrays[k], dtype="<f8").tobytes())


def load(path: str | Path, kind: str | None = None) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise ValueError(f"{path}: not a model file")
    pos = len(MAGIC)
    (size,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    header = json.loads(data[pos:pos + size].decode("utf-8"))
    pos += size
    if header["version"] != VERSION:
        raise ValueError(f"{path}: unsupported model version {header['version']}")
    if kind is not None and header["kind"] != kind:
        raise ValueError(f"{path}: expected a {kind} model, found {header['kind']}")
    arrays = {}
    for spec in header["arrays"]:
        count = int(np.prod(spec["shape"], dtype=np.int64))
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=pos).reshape(spec["shape"])
        arrays[spec["name"]] = arr.astype(np.float64)
        pos += 8 * count
    return header, arrays


def peek_kind(path: str | Path) -> str:
    header, _ = load(path)
    return header["kind"]
