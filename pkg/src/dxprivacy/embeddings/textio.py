"""Readers and writers for the whitespace-separated GloVe / fastText text format."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, TextIO

import numpy as np

from ..errors import DimensionMismatchError, DuplicateTokenError, EmbeddingParseError
from .model import EmbeddingModel


@dataclass(frozen=True)
class LoadOptions:
    """Ingestion policy for text embedding files.

    ``expect_header`` skips a leading ``"<count> <dim>"`` line (fastText);
    the declared dim is then enforced on every row.
    """

    expect_header: bool = False
    lowercase: bool = False
    max_words: int | None = None
    on_duplicate: Literal["keep-first", "error"] = "keep-first"

    def __post_init__(self) -> None:
        if self.max_words is not None and self.max_words < 1:
            raise ValueError("max_words must be >= 1")
        if self.on_duplicate not in ("keep-first", "error"):
            raise ValueError(f"unknown duplicate policy {self.on_duplicate!r}")


def _parse_header(line: str, lineno: int) -> int:
    parts = line.split()
    if len(parts) != 2:
        raise EmbeddingParseError("expected header '<count> <dim>'", lineno)
    try:
        count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise EmbeddingParseError("header fields are not integers", lineno) from None
    if count < 0 or dim < 1:
        raise EmbeddingParseError("header has non-positive dimension", lineno)
    return dim


def read_text_embeddings(
    lines: Iterable[str], opts: LoadOptions | None = None, name: str = ""
) -> EmbeddingModel:
    opts = opts or LoadOptions()
    words: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    dim: int | None = None
    header_pending = opts.expect_header

    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if header_pending:
            dim = _parse_header(line, lineno)
            header_pending = False
            continue
        parts = line.split()
        if len(parts) < 2:
            raise EmbeddingParseError("expected a token followed by numbers", lineno)
        token = parts[0].lower() if opts.lowercase else parts[0]
        try:
            vec = np.array(parts[1:], dtype=np.float64)
        except ValueError:
            raise EmbeddingParseError("unparsable number", lineno) from None
        if not np.isfinite(vec).all():
            raise EmbeddingParseError("non-finite value", lineno)
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise DimensionMismatchError(dim, len(vec), lineno)
        if token in seen:
            if opts.on_duplicate == "error":
                raise DuplicateTokenError(token, lineno)
            continue
        seen.add(token)
        words.append(token)
        rows.append(vec)
        if opts.max_words is not None and len(words) >= opts.max_words:
            break

    if header_pending:
        raise EmbeddingParseError("missing header line", 1)
    if not words:
        raise EmbeddingParseError("no embedding rows found")
    vectors = np.vstack(rows).astype(np.float32)
    return EmbeddingModel(tuple(words), vectors, name=name)


def load_text_embeddings(
    path: str | os.PathLike, opts: LoadOptions | None = None
) -> EmbeddingModel:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        return read_text_embeddings(fh, opts, name=path.name)


def write_text_embeddings(model: EmbeddingModel, fh: TextIO, header: bool = False) -> None:
    """Write ``model`` in text form; float32 values round-trip exactly via ``repr``."""
    if header:
        fh.write(f"{len(model)} {model.dim}\n")
    for word, row in zip(model.words, model.vectors):
        fh.write(word + " " + " ".join(repr(float(x)) for x in row) + "\n")


def dumps_text_embeddings(model: EmbeddingModel, header: bool = False) -> str:
    buf = io.StringIO()
    write_text_embeddings(model, buf, header=header)
    return buf.getvalue()
