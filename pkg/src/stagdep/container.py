"""Deterministic binary container for model and PCA files.

Layout: a magic line, a sorted-key JSON header naming the metadata and an
array manifest (name, dtype, shape, byte offset), then the raw
little-endian C-order array payloads. Identical content always produces
identical bytes (unlike zip-based formats, which embed timestamps), and
float arrays round-trip exactly.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import DataError

_MAGIC = b"stagdep-container\n"

_DTYPES = {"float64", "int64", "int32"}


def save_container(path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    manifest = []
    payload = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        if arr.dtype.name not in _DTYPES:
            raise ValueError(f"array {name!r} has unsupported dtype {arr.dtype}")
        data = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
        manifest.append(
            {
                "name": name,
                "dtype": arr.dtype.name,
                "shape": list(arr.shape),
                "offset": offset,
            }
        )
        payload.append(data)
        offset += len(data)
    header = json.dumps(
        {"meta": meta, "arrays": manifest},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(len(header).to_bytes(8, "little"))
        fh.write(header)
        for data in payload:
            fh.write(data)


def load_container(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise DataError(f"{path}: not a stagdep container file")
        header_len = int.from_bytes(fh.read(8), "little")
        try:
            header = json.loads(fh.read(header_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}: corrupt container header: {exc}") from None
        blob = fh.read()
    arrays = {}
    for entry in header["arrays"]:
        dtype = np.dtype(entry["dtype"]).newbyteorder("<")
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        end = start + count * dtype.itemsize
        if end > len(blob):
            raise DataError(f"{path}: truncated container file")
        arr = np.frombuffer(blob[start:end], dtype=dtype).reshape(shape)
        arrays[entry["name"]] = arr.astype(np.dtype(entry["dtype"]), copy=True)
    return header["meta"], arrays
