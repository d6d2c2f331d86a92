from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from ..errors import DimensionMismatchError, DuplicateTokenError, WordNotFoundError
from . import search


@dataclass(frozen=True, eq=False)
class EmbeddingModel:
    """An immutable vocabulary with one float32 vector per word.

    Row order is significant: it fixes word ids and the tie-break order of
    every nearest-neighbour query. Distances are accumulated in float64.
    """

    words: tuple[str, ...]
    vectors: np.ndarray
    name: str = ""
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        words = tuple(self.words)
        vectors = np.array(self.vectors, dtype=np.float32, order="C", copy=True)
        if vectors.ndim != 2:
            raise ValueError("vectors must be a 2-D matrix")
        if vectors.shape[0] != len(words):
            raise ValueError(f"{len(words)} words but {vectors.shape[0]} vectors")
        if vectors.shape[1] < 1:
            raise ValueError("embedding dimension must be positive")
        if not np.isfinite(vectors).all():
            raise ValueError("embedding contains NaN or Inf entries")
        index: dict[str, int] = {}
        for i, w in enumerate(words):
            if w in index:
                raise DuplicateTokenError(w)
            index[w] = i
        vectors.flags.writeable = False
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: object) -> bool:
        return word in self._index

    def __repr__(self) -> str:
        return f"EmbeddingModel(name={self.name!r}, words={len(self)}, dim={self.dim})"

    @cached_property
    def vectors64(self) -> np.ndarray:
        v = self.vectors.astype(np.float64)
        v.flags.writeable = False
        return v

    @cached_property
    def _sq_norms(self) -> np.ndarray:
        v = self.vectors64
        return np.einsum("ij,ij->i", v, v)

    def lookup(self, word: str) -> int | None:
        return self._index.get(word)

    def index_of(self, word: str) -> int:
        try:
            return self._index[word]
        except KeyError:
            raise WordNotFoundError(word) from None

    def word_of(self, index: int) -> str:
        return self.words[index]

    def vector_of(self, word: str) -> np.ndarray | None:
        """Stored vector for ``word``, or None when it is out of vocabulary."""
        i = self._index.get(word)
        return None if i is None else self.vectors[i]

    def _as_queries(self, queries) -> np.ndarray:
        q = np.asarray(queries, dtype=np.float64)
        if q.ndim == 1:
            q = q[None, :]
        if q.ndim != 2 or q.shape[1] != self.dim:
            raise DimensionMismatchError(self.dim, q.shape[-1] if q.ndim else 0)
        if not np.isfinite(q).all():
            raise ValueError("query contains NaN or Inf entries")
        return q

    def nearest_word(self, query) -> tuple[int, float]:
        """Row index and exact distance of the closest word (lowest index on ties)."""
        idx, dist = search.nearest(self.vectors64, self._sq_norms, self._as_queries(query))
        return int(idx[0]), float(dist[0])

    def nearest_words(self, queries, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
        return search.nearest(
            self.vectors64, self._sq_norms, self._as_queries(queries), workers=workers
        )

    def k_nearest(self, word: str, k: int) -> list[tuple[int, float]]:
        """The ``k`` closest other words to ``word``, ascending by distance."""
        i = self.index_of(word)
        idx, dist = self.k_nearest_ids(np.array([i]), k)
        return [(int(j), float(d)) for j, d in zip(idx[0], dist[0])]

    def k_nearest_ids(
        self, ids: np.ndarray, k: int, workers: int = 1
    ) -> tuple[np.ndarray, np.ndarray]:
        if not 1 <= k <= len(self) - 1:
            raise ValueError(f"k must be in [1, {len(self) - 1}], got {k}")
        ids = np.asarray(ids, dtype=np.intp)
        return search.k_nearest(
            self.vectors64, self._sq_norms, self.vectors64[ids], k,
            exclude=ids, workers=workers,
        )

    def string_distance(self, x: Sequence[str], x_other: Sequence[str]) -> float:
        """Sum of per-position Euclidean distances between two equal-length strings."""
        if len(x) != len(x_other):
            raise ValueError(f"length mismatch: {len(x)} vs {len(x_other)}")
        total = 0.0
        for pos, (a, b) in enumerate(zip(x, x_other)):
            ia, ib = self._index.get(a), self._index.get(b)
            if ia is None:
                raise WordNotFoundError(a, pos)
            if ib is None:
                raise WordNotFoundError(b, pos)
            diff = self.vectors64[ia] - self.vectors64[ib]
            total += float(np.sqrt(diff @ diff))
        return total
