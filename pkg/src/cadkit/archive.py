"""Tensor archive: one JSON header plus one little-endian binary blob.

Header (`<stem>.json`):
    {"blob": "<stem>.bin",
     "tensors": [{"name": ..., "dtype": "f32"|"f64"|"i32",
                  "shape": [...], "byte_offset": ...}, ...]}

The blob holds each tensor row-major little-endian at its byte_offset, offsets
8-byte aligned so external readers can view them zero-copy.  Read-back is
bit-exact.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .errors import CadkitError

_DTYPES = {
    "f32": np.dtype("<f4"),
    "f64": np.dtype("<f8"),
    "i32": np.dtype("<i4"),
}
_NAMES = {v: k for k, v in _DTYPES.items()}


def _dtype_name(arr: np.ndarray) -> str:
    key = arr.dtype.newbyteorder("<")
    if key not in _NAMES:
        raise CadkitError(f"unsupported archive dtype {arr.dtype}")
    return _NAMES[key]


def write_archive(path, tensors: dict) -> None:
    """Write named arrays to `path` (.json header) and its sibling .bin blob."""
    path = Path(path)
    if path.suffix != ".json":
        raise CadkitError("archive header path must end in .json")
    blob_path = path.with_suffix(".bin")
    entries = []
    chunks = []
    offset = 0
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr)
        dname = _dtype_name(arr)
        arr = arr.astype(_DTYPES[dname], copy=False)
        pad = (-offset) % 8
        if pad:
            chunks.append(b"\x00" * pad)
            offset += pad
        raw = arr.tobytes(order="C")
        entries.append(
            {
                "name": str(name),
                "dtype": dname,
                "shape": list(arr.shape),
                "byte_offset": offset,
            }
        )
        chunks.append(raw)
        offset += len(raw)
    header = {"blob": blob_path.name, "tensors": entries}
    tmp_blob = blob_path.with_name(blob_path.name + ".tmp")
    tmp_head = path.with_name(path.name + ".tmp")
    with open(tmp_blob, "wb") as fh:
        for c in chunks:
            fh.write(c)
    with open(tmp_head, "w", encoding="utf-8") as fh:
        json.dump(header, fh, indent=1)
        fh.write("\n")
    os.replace(tmp_blob, blob_path)
    os.replace(tmp_head, path)


def read_archive(path) -> dict:
    """Read an archive back into {name: ndarray}; bit-exact w.r.t. write."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise CadkitError(f"bad archive header {path}: {e}") from None
    blob_path = path.parent / header["blob"]
    try:
        blob = blob_path.read_bytes()
    except OSError as e:
        raise CadkitError(f"cannot read archive blob: {e}") from None
    out = {}
    for ent in header["tensors"]:
        dt = _DTYPES.get(ent["dtype"])
        if dt is None:
            raise CadkitError(f"unknown dtype {ent['dtype']!r} in {path}")
        shape = tuple(int(s) for s in ent["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = int(ent["byte_offset"])
        end = start + count * dt.itemsize
        if end > len(blob):
            raise CadkitError(f"tensor {ent['name']!r} overruns blob in {path}")
        arr = np.frombuffer(blob[start:end], dtype=dt).reshape(shape)
        out[ent["name"]] = arr.copy()
    return out
