"""Binary containers for weights/tensors and text-embedding tables.

Both formats are little-endian throughout and versioned.

Tensor container (magic ``P3DW``):
    magic (4 bytes) | version u32 | tensor count u32
    per tensor: name length u32 | name UTF-8 | rank u32 | dims u32 x rank |
                payload float32 x prod(dims), C order

Embedding table (magic ``P3DE``):
    magic (4 bytes) | version u32 | entry count u32
    per entry: key length u32 | key UTF-8 | dim u32 | values float32 x dim

Payloads are stored as float32; readers return float64 arrays (the engine's
working dtype). Weight matrices use the input-by-output convention, i.e. a
layer computes ``x @ W + b``.
"""

from __future__ import annotations

import struct
from typing import BinaryIO, Mapping

import numpy as np

MAGIC_TENSORS = b"P3DW"
MAGIC_EMBEDDINGS = b"P3DE"
FORMAT_VERSION = 1

_U32 = struct.Struct("<I")
_MAX_SANE_LEN = 1 << 30


class ContainerFormatError(ValueError):
    """Raised when a container file is malformed or truncated."""


def _write_u32(fh: BinaryIO, value: int) -> None:
    fh.write(_U32.pack(value))


def _read_u32(fh: BinaryIO, what: str) -> int:
    raw = fh.read(4)
    if len(raw) != 4:
        raise ContainerFormatError(f"truncated file while reading {what}")
    return _U32.unpack(raw)[0]


def _read_exact(fh: BinaryIO, count: int, what: str) -> bytes:
    raw = fh.read(count)
    if len(raw) != count:
        raise ContainerFormatError(f"truncated file while reading {what}")
    return raw


def write_tensors(path: str, tensors: Mapping[str, np.ndarray]) -> None:
    """Write named tensors; values are cast to little-endian float32."""
    with open(path, "wb") as fh:
        fh.write(MAGIC_TENSORS)
        _write_u32(fh, FORMAT_VERSION)
        _write_u32(fh, len(tensors))
        for name, tensor in tensors.items():
            arr = np.ascontiguousarray(np.asarray(tensor), dtype="<f4")
            encoded = name.encode("utf-8")
            _write_u32(fh, len(encoded))
            fh.write(encoded)
            _write_u32(fh, arr.ndim)
            for dim in arr.shape:
                _write_u32(fh, dim)
            fh.write(arr.tobytes(order="C"))


def read_tensors(path: str) -> dict[str, np.ndarray]:
    """Read a tensor container; returns float64 arrays keyed by name."""
    out: dict[str, np.ndarray] = {}
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC_TENSORS:
            raise ContainerFormatError(
                f"bad magic {magic!r}, expected {MAGIC_TENSORS!r}"
            )
        version = _read_u32(fh, "version")
        if version != FORMAT_VERSION:
            raise ContainerFormatError(f"unsupported container version {version}")
        count = _read_u32(fh, "tensor count")
        for index in range(count):
            name_len = _read_u32(fh, f"tensor {index} name length")
            if name_len > _MAX_SANE_LEN:
                raise ContainerFormatError(f"tensor {index} name length is implausible")
            name = _read_exact(fh, name_len, f"tensor {index} name").decode("utf-8")
            rank = _read_u32(fh, f"tensor {name!r} rank")
            if rank > 32:
                raise ContainerFormatError(f"tensor {name!r} rank {rank} is implausible")
            dims = tuple(_read_u32(fh, f"tensor {name!r} dim") for _ in range(rank))
            size = int(np.prod(dims, dtype=np.int64)) if dims else 1
            if size > _MAX_SANE_LEN:
                raise ContainerFormatError(f"tensor {name!r} payload is implausible")
            payload = _read_exact(fh, 4 * size, f"tensor {name!r} payload")
            arr = np.frombuffer(payload, dtype="<f4").reshape(dims)
            if name in out:
                raise ContainerFormatError(f"duplicate tensor name {name!r}")
            out[name] = arr.astype(np.float64)
        trailing = fh.read(1)
        if trailing:
            raise ContainerFormatError("trailing bytes after final tensor")
    return out


def write_embeddings(path: str, table: Mapping[str, np.ndarray]) -> None:
    """Write a prompt-keyed embedding table; vectors cast to float32."""
    with open(path, "wb") as fh:
        fh.write(MAGIC_EMBEDDINGS)
        _write_u32(fh, FORMAT_VERSION)
        _write_u32(fh, len(table))
        for key, vector in table.items():
            arr = np.ascontiguousarray(np.asarray(vector), dtype="<f4").reshape(-1)
            encoded = key.encode("utf-8")
            _write_u32(fh, len(encoded))
            fh.write(encoded)
            _write_u32(fh, arr.shape[0])
            fh.write(arr.tobytes(order="C"))


def read_embeddings(path: str) -> dict[str, np.ndarray]:
    """Read an embedding table; returns float64 vectors keyed by prompt."""
    out: dict[str, np.ndarray] = {}
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC_EMBEDDINGS:
            raise ContainerFormatError(
                f"bad magic {magic!r}, expected {MAGIC_EMBEDDINGS!r}"
            )
        version = _read_u32(fh, "version")
        if version != FORMAT_VERSION:
            raise ContainerFormatError(f"unsupported container version {version}")
        count = _read_u32(fh, "entry count")
        for index in range(count):
            key_len = _read_u32(fh, f"entry {index} key length")
            if key_len > _MAX_SANE_LEN:
                raise ContainerFormatError(f"entry {index} key length is implausible")
            key = _read_exact(fh, key_len, f"entry {index} key").decode("utf-8")
            dim = _read_u32(fh, f"entry {key!r} dim")
            if dim > _MAX_SANE_LEN:
                raise ContainerFormatError(f"entry {key!r} dim is implausible")
            payload = _read_exact(fh, 4 * dim, f"entry {key!r} payload")
            if key in out:
                raise ContainerFormatError(f"duplicate embedding key {key!r}")
            out[key] = np.frombuffer(payload, dtype="<f4").astype(np.float64)
        trailing = fh.read(1)
        if trailing:
            raise ContainerFormatError("trailing bytes after final entry")
    return out
