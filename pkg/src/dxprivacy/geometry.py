"""Distance from each word to its k-th nearest neighbour, summarised by percentile."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .embeddings import EmbeddingModel

DEFAULT_KS = (1, 5, 10, 20, 50, 100, 200, 500, 1000)
DEFAULT_PERCENTILES = (5, 20, 50, 80, 95)


@dataclass(frozen=True)
class KnnDistanceTable:
    ks: tuple[int, ...]
    percentiles: tuple[float, ...]
    cells: np.ndarray  # shape (len(ks), len(percentiles))
    sample_size: int

    def cell(self, k: int, percentile: float) -> float:
        return float(self.cells[self.ks.index(k), self.percentiles.index(percentile)])

    def is_monotone(self) -> bool:
        c = self.cells
        return bool((np.diff(c, axis=0) >= 0).all() and (np.diff(c, axis=1) >= 0).all())

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k"] + [f"p{p:g}" for p in self.percentiles])
        for k, row in zip(self.ks, self.cells):
            w.writerow([k] + [repr(float(x)) for x in row])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


@dataclass(frozen=True)
class Histogram:
    counts: np.ndarray
    edges: np.ndarray

    def to_dict(self) -> dict:
        return {"edges": self.edges.tolist(), "counts": self.counts.tolist()}


def _resolve_sample(model: EmbeddingModel, words: Sequence[str] | None) -> np.ndarray:
    if words is None:
        return np.arange(len(model))
    return np.array([model.index_of(w) for w in words], dtype=np.intp)


def _check_k(model: EmbeddingModel, k: int) -> None:
    if not 1 <= k <= len(model) - 1:
        raise ValueError(f"k={k} out of range [1, {len(model) - 1}]")


def kth_neighbor_distances(
    model: EmbeddingModel,
    ks: Sequence[int],
    words: Sequence[str] | None = None,
    workers: int = 1,
) -> np.ndarray:
    """``(len(words), len(ks))`` matrix of exact k-th neighbour distances, self excluded."""
    for k in ks:
        _check_k(model, k)
    ids = _resolve_sample(model, words)
    _, dist = model.k_nearest_ids(ids, max(ks), workers=workers)
    return dist[:, np.asarray(ks) - 1]


def knn_distance_table(
    model: EmbeddingModel,
    ks: Sequence[int] = DEFAULT_KS,
    percentiles: Sequence[float] = DEFAULT_PERCENTILES,
    words: Sequence[str] | None = None,
    workers: int = 1,
) -> KnnDistanceTable:
    """Percentiles (linear interpolation) of the k-th neighbour distance over a word sample.

    ``words=None`` analyses the whole vocabulary.
    """
    ks = tuple(int(k) for k in ks)
    if not ks or list(ks) != sorted(ks):
        raise ValueError("ks must be a non-empty ascending sequence")
    percentiles = tuple(float(p) for p in percentiles)
    if any(not 0 < p < 100 for p in percentiles):
        raise ValueError("percentiles must lie strictly between 0 and 100")
    dist = kth_neighbor_distances(model, ks, words, workers=workers)
    cells = np.percentile(dist, percentiles, axis=0, method="linear").T
    return KnnDistanceTable(ks, percentiles, cells, sample_size=len(dist))


def knn_distance_histogram(
    model: EmbeddingModel,
    k: int,
    bins: int | Sequence[float] = 20,
    words: Sequence[str] | None = None,
    workers: int = 1,
) -> Histogram:
    dist = kth_neighbor_distances(model, [k], words, workers=workers)[:, 0]
    counts, edges = np.histogram(dist, bins=bins)
    return Histogram(counts, edges)
