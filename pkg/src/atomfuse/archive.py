"""``ATSL1`` tensor archive.

Layout: the magic ``b"ATSL1"``, an unsigned 64-bit little-endian header
length, that many bytes of UTF-8 JSON, then a blob of little-endian
float32 values. The header is ``{"tensors": [{"name", "shape", "dtype",
"offset"}, ...], "meta": {...}}``; ``offset`` is in bytes from the start of
the blob. ``meta`` is optional free-form JSON.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ._io import atomic_write
from .errors import FormatError

__all__ = ["MAGIC", "encode_archive", "decode_archive", "write_archive", "read_archive"]

MAGIC = b"ATSL1"
_F32 = np.dtype("<f4")


def encode_archive(tensors: dict, meta: dict | None = None) -> bytes:
    entries = []
    chunks = []
    offset = 0
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype=_F32)
        entries.append({"name": name, "shape": list(arr.shape), "dtype": "f32", "offset": offset})
        raw = arr.tobytes()
        chunks.append(raw)
        offset += len(raw)
    header = {"tensors": entries}
    if meta:
        header["meta"] = meta
    hbytes = json.dumps(header, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<Q", len(hbytes)) + hbytes + b"".join(chunks)


def decode_archive(data: bytes, source="<bytes>"):
    """Return ``(tensors, meta)``; tensors keep file order and are float32."""
    if data[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{source}: bad magic, not an ATSL1 archive")
    pos = len(MAGIC)
    if len(data) < pos + 8:
        raise FormatError(f"{source}: truncated header length")
    (hlen,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    if len(data) < pos + hlen:
        raise FormatError(f"{source}: truncated header")
    try:
        header = json.loads(data[pos : pos + hlen].decode("utf-8"))
        entries = header["tensors"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"{source}: malformed archive header ({exc})") from None
    blob = memoryview(data)[pos + hlen :]
    tensors = {}
    for e in entries:
        try:
            name, shape, dtype, off = e["name"], tuple(int(d) for d in e["shape"]), e["dtype"], int(e["offset"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{source}: malformed tensor entry {e!r} ({exc})") from None
        if dtype != "f32":
            raise FormatError(f"{source}: tensor {name!r} has unsupported dtype {dtype!r}")
        if name in tensors:
            raise FormatError(f"{source}: duplicate tensor {name!r}")
        count = int(np.prod(shape, dtype=np.int64))
        end = off + count * 4
        if off < 0 or any(d < 0 for d in shape) or end > len(blob):
            raise FormatError(f"{source}: tensor {name!r} lies outside the data blob")
        arr = np.frombuffer(blob[off:end], dtype=_F32).reshape(shape).copy()
        tensors[name] = arr
    return tensors, header.get("meta", {}) or {}


def write_archive(path, tensors: dict, meta: dict | None = None):
    atomic_write(path, encode_archive(tensors, meta))


def read_archive(path):
    path = Path(path)
    return decode_archive(path.read_bytes(), source=str(path))
