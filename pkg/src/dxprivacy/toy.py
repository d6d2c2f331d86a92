"""Small hand-built and synthetic embedding models for demos, tests and audits."""

from __future__ import annotations

import numpy as np

from .embeddings import EmbeddingModel


def three_word() -> EmbeddingModel:
    return EmbeddingModel(("a", "b", "c"), [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], name="toy3")


def two_word(separation: float = 1.0) -> EmbeddingModel:
    return EmbeddingModel(("a", "b"), [[0.0, 0.0], [separation, 0.0]], name="toy2")


def five_word() -> EmbeddingModel:
    return EmbeddingModel(
        ("a", "b", "c", "d", "e"),
        [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 0.5]],
        name="toy5",
    )


def line_model(count: int = 5, spacing: float = 1.0) -> EmbeddingModel:
    """Words on the x-axis; ``w0`` at the origin, ``w{i}`` at ``i * spacing``."""
    vecs = [[i * spacing, 0.0] for i in range(count)]
    return EmbeddingModel(tuple(f"w{i}" for i in range(count)), vecs, name="line")


# pairwise distances between 0.63 and 3.12
_EIGHT = [
    [0.0, 0.0], [1.0, 0.0], [2.2, 0.3], [0.4, 1.1],
    [1.6, 1.4], [-0.9, 0.6], [0.8, 2.6], [2.0, 0.9],
]


def eight_word() -> EmbeddingModel:
    return EmbeddingModel(tuple("abcdefgh"), _EIGHT, name="toy8")


def clustered(
    n_words: int = 2000,
    dim: int = 50,
    n_clusters: int = 40,
    spread: float = 0.35,
    seed: int = 0,
) -> EmbeddingModel:
    """Gaussian clusters imitating the clumpy geometry of real word embeddings."""
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((n_clusters, dim))
    labels = rng.integers(0, n_clusters, size=n_words)
    vecs = centers[labels] + spread * rng.standard_normal((n_words, dim))
    width = len(str(n_words - 1))
    words = tuple(f"w{i:0{width}d}" for i in range(n_words))
    return EmbeddingModel(words, vecs.astype(np.float32), name=f"clustered{dim}d")
