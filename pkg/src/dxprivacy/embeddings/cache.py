"""Binary cache for embedding models.

Layout (all integers little-endian)::

    magic      8 bytes   b"DXPEMB\\r\\n"
    version    u32       FORMAT_VERSION
    dim        u32
    count      u64
    name       u32 length + UTF-8 bytes
    tokens     count x (u32 length + UTF-8 bytes)
    vectors    count * dim float32 ('<f4'), row-major

Nothing may follow the vector block.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .._atomic import atomic_write
from ..errors import CacheCorruptionError, IncompatibleCacheError
from .model import EmbeddingModel

MAGIC = b"DXPEMB\r\n"
FORMAT_VERSION = 1
_HEAD = struct.Struct("<IIQ")
_LEN = struct.Struct("<I")


def _write_str(fh: BinaryIO, s: str) -> None:
    b = s.encode("utf-8")
    fh.write(_LEN.pack(len(b)))
    fh.write(b)


def write_cache(model: EmbeddingModel, fh: BinaryIO) -> None:
    fh.write(MAGIC)
    fh.write(_HEAD.pack(FORMAT_VERSION, model.dim, len(model)))
    _write_str(fh, model.name)
    for w in model.words:
        _write_str(fh, w)
    fh.write(np.ascontiguousarray(model.vectors, dtype="<f4").tobytes())


def save_cache(model: EmbeddingModel, path: str | os.PathLike) -> None:
    with atomic_write(path, binary=True) as fh:
        write_cache(model, fh)


def is_cache_file(path: str | os.PathLike) -> bool:
    try:
        with open(path, "rb") as fh:
            return fh.read(len(MAGIC)) == MAGIC
    except OSError:
        return False


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.data):
            raise CacheCorruptionError(
                f"truncated cache: needed {n} bytes at offset {self.pos}"
            )
        chunk = self.data[self.pos : end]
        self.pos = end
        return chunk

    def string(self) -> str:
        (n,) = _LEN.unpack(self.take(_LEN.size))
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as e:
            raise CacheCorruptionError(f"invalid UTF-8 in token block: {e}") from None


def read_cache(data: bytes) -> EmbeddingModel:
    if data[: len(MAGIC)] != MAGIC:
        raise IncompatibleCacheError("not an embedding cache (bad magic bytes)")
    r = _Reader(data)
    r.take(len(MAGIC))
    version, dim, count = _HEAD.unpack(r.take(_HEAD.size))
    if version != FORMAT_VERSION:
        raise IncompatibleCacheError(f"unsupported cache version {version}")
    name = r.string()
    words = tuple(r.string() for _ in range(count))
    raw = r.take(4 * dim * count)
    if r.pos != len(data):
        raise CacheCorruptionError(f"{len(data) - r.pos} trailing bytes after vector block")
    vectors = np.frombuffer(raw, dtype="<f4").reshape(count, dim)
    return EmbeddingModel(words, vectors, name=name)


def load_cache(path: str | os.PathLike) -> EmbeddingModel:
    return read_cache(Path(path).read_bytes())
