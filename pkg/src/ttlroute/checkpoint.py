"""Versioned, endianness-fixed binary container for parameters and state.

Layout (all integers little-endian):
    bytes 0..7    magic  b"TTLRCKP\\0"
    bytes 8..11   u32    container version (currently 1)
    bytes 12..19  u64    header length H in bytes
    bytes 20..20+H       UTF-8 JSON header: {"meta": {...}, "arrays": [
                             {"name": str, "shape": [...], "dtype": "<f8"|"<i8"}, ...]}
    remainder            the arrays' raw buffers, concatenated in header order,
                         C-contiguous, little-endian

``meta`` must be JSON-serializable; array names are unique.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"TTLRCKP\x00"
VERSION = 1

_DTYPES = {"<f8": np.dtype("<f8"), "<i8": np.dtype("<i8")}


def save_container(path, meta: dict, arrays: dict[str, np.ndarray]):
    entries = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        if arr.dtype == np.float64:
            dtype = "<f8"
        elif arr.dtype == np.int64:
            dtype = "<i8"
        else:
            raise ValueError(f"unsupported dtype {arr.dtype} for array {name!r}")
        entries.append({"name": name, "shape": list(arr.shape), "dtype": dtype})
        blobs.append(arr.astype(_DTYPES[dtype], copy=False).tobytes())
    header = json.dumps({"meta": meta, "arrays": entries},
                        sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for blob in blobs:
            f.write(blob)


def load_container(path):
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a checkpoint container")
        version, = struct.unpack("<I", f.read(4))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported container version {version}")
        hlen, = struct.unpack("<Q", f.read(8))
        header = json.loads(f.read(hlen).decode("utf-8"))
        arrays = {}
        for entry in header["arrays"]:
            dtype = _DTYPES[entry["dtype"]]
            count = int(np.prod(entry["shape"])) if entry["shape"] else 1
            buf = f.read(count * dtype.itemsize)
            arrays[entry["name"]] = np.frombuffer(buf, dtype=dtype).reshape(entry["shape"]).copy()
    return header["meta"], arrays
