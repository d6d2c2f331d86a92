"""Embedding storage, loading, caching and exact nearest-neighbour search."""

from .cache import is_cache_file, load_cache, read_cache, save_cache, write_cache
from .model import EmbeddingModel
from .textio import (
    LoadOptions,
    dumps_text_embeddings,
    load_text_embeddings,
    read_text_embeddings,
    write_text_embeddings,
)


def load_embeddings(path, opts: LoadOptions | None = None) -> EmbeddingModel:
    """Load either a binary cache or a text embedding file, sniffing the magic bytes."""
    if is_cache_file(path):
        return load_cache(path)
    return load_text_embeddings(path, opts)


def intersect_vocabularies(a: EmbeddingModel, b: EmbeddingModel) -> list[str]:
    """Words present in both models, in ``a``'s row order."""
    return [w for w in a.words if w in b]


__all__ = [
    "EmbeddingModel",
    "LoadOptions",
    "dumps_text_embeddings",
    "intersect_vocabularies",
    "is_cache_file",
    "load_cache",
    "load_embeddings",
    "load_text_embeddings",
    "read_cache",
    "read_text_embeddings",
    "save_cache",
    "write_cache",
    "write_text_embeddings",
]
