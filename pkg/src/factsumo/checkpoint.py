"""Binary parameter checkpoints.

Layout (all integers little-endian)::

    magic      8 bytes  b"FSUMOCKP"
    version    uint32   (currently 1)
    meta_len   uint64   length of the UTF-8 JSON metadata block
    meta       meta_len bytes
    count      uint32   number of tensors
    per tensor:
        name_len uint16, name (UTF-8)
        ndim     uint8,  dims (uint64 each)
        payload  prod(dims) float64 values, row-major
"""

import json
import struct

import numpy as np

MAGIC = b"FSUMOCKP"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, tensors, metadata=None):
    meta = json.dumps(metadata or {}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(meta)))
        fh.write(meta)
        fh.write(struct.pack("<I", len(tensors)))
        for name, array in tensors.items():
            array = np.ascontiguousarray(array, dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", array.ndim))
            fh.write(struct.pack(f"<{array.ndim}Q", *array.shape))
            fh.write(array.tobytes(order="C"))


def _read(fh, n):
    buf = fh.read(n)
    if len(buf) != n:
        raise CheckpointError("truncated checkpoint")
    return buf


def load_checkpoint(path):
    """Return ``(tensors, metadata)`` with tensors as an ordered name->array dict."""
    with open(path, "rb") as fh:
        if _read(fh, len(MAGIC)) != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint (bad magic bytes)")
        (version,) = struct.unpack("<I", _read(fh, 4))
        if version != VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
        (meta_len,) = struct.unpack("<Q", _read(fh, 8))
        metadata = json.loads(_read(fh, meta_len).decode("utf-8"))
        (count,) = struct.unpack("<I", _read(fh, 4))
        tensors = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read(fh, 2))
            name = _read(fh, name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", _read(fh, 1))
            shape = struct.unpack(f"<{ndim}Q", _read(fh, 8 * ndim)) if ndim else ()
            size = int(np.prod(shape)) if shape else 1
            payload = np.frombuffer(_read(fh, 8 * size), dtype="<f8")
            tensors[name] = payload.reshape(shape).astype(np.float64)
        if fh.read(1):
            raise CheckpointError(f"{path}: trailing bytes after last tensor")
    return tensors, metadata
