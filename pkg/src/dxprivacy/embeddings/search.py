"""Exact brute-force nearest-neighbour kernels.

Candidate selection uses the ``|q|^2 - 2 q.v + |v|^2`` expansion (one GEMM per
block of queries), which is fast but can misorder near-ties by a few ulps.
Every row whose runner-up lies within a conservative tolerance of the best
candidate is therefore re-ranked with directly computed differences, so the
final answer is the exact argmin with lowest-index tie-breaking.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

# cap on the (queries x vocabulary) float64 scratch matrix per block
_BLOCK_ELEMENTS = 1 << 22
# relative slack on squared distances; far above float64 expansion error
_REL_TOL = 1e-9


def exact_distances(vectors: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Euclidean distance from ``query`` to every row, from explicit differences."""
    diff = vectors - query
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _block_rows(n_queries: int, n_vocab: int) -> int:
    return max(1, min(n_queries, _BLOCK_ELEMENTS // max(n_vocab, 1)))


def _expanded_sq(queries: np.ndarray, vectors: np.ndarray, sq_norms: np.ndarray):
    qn = np.einsum("ij,ij->i", queries, queries)
    d2 = queries @ vectors.T
    d2 *= -2.0
    d2 += qn[:, None]
    d2 += sq_norms[None, :]
    tol = _REL_TOL * (qn + sq_norms.max(initial=0.0)) + 1e-300
    return d2, tol


def _nearest_block(queries, vectors, sq_norms):
    d2, tol = _expanded_sq(queries, vectors, sq_norms)
    best = d2.argmin(axis=1)
    rows = np.arange(len(queries))
    mins = d2[rows, best]
    close = d2 <= (mins + tol)[:, None]
    ambiguous = np.flatnonzero(close.sum(axis=1) > 1)
    for r in ambiguous:
        cand = np.flatnonzero(close[r])
        dist = exact_distances(vectors[cand], queries[r])
        # argmin returns the first minimum; cand is ascending, so lowest index wins
        best[r] = cand[dist.argmin()]
    diff = vectors[best] - queries
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return best, dist


def nearest(
    vectors: np.ndarray,
    sq_norms: np.ndarray,
    queries: np.ndarray,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact nearest row for each query.

    ``vectors`` and ``queries`` must be float64. Returns ``(indices, distances)``.
    Results do not depend on ``workers``; blocks are independent.
    """
    m = len(queries)
    if m == 0:
        return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.float64)
    step = _block_rows(m, len(vectors))
    starts = range(0, m, step)

    def run(s):
        return _nearest_block(queries[s : s + step], vectors, sq_norms)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    idx = np.concatenate([p[0] for p in parts])
    dist = np.concatenate([p[1] for p in parts])
    return idx, dist


def _knn_block(queries, exclude, vectors, sq_norms, k):
    d2, tol = _expanded_sq(queries, vectors, sq_norms)
    if exclude is not None:
        d2[np.arange(len(queries)), exclude] = np.inf
    kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
    out_idx = np.empty((len(queries), k), dtype=np.intp)
    out_dist = np.empty((len(queries), k), dtype=np.float64)
    for r in range(len(queries)):
        cand = np.flatnonzero(d2[r] <= kth[r] + tol[r])
        if exclude is not None:
            cand = cand[cand != exclude[r]]
        dist = exact_distances(vectors[cand], queries[r])
        order = np.lexsort((cand, dist))[:k]
        out_idx[r] = cand[order]
        out_dist[r] = dist[order]
    return out_idx, out_dist


def k_nearest(
    vectors: np.ndarray,
    sq_norms: np.ndarray,
    queries: np.ndarray,
    k: int,
    exclude: np.ndarray | None = None,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact k nearest rows per query, sorted by (distance, index).

    ``exclude`` optionally names one row per query to leave out (the query
    word itself). Returns ``(indices, distances)`` of shape ``(m, k)``.
    """
    m = len(queries)
    if m == 0:
        return np.empty((0, k), dtype=np.intp), np.empty((0, k), dtype=np.float64)
    step = _block_rows(m, len(vectors))
    starts = range(0, m, step)

    def run(s):
        ex = None if exclude is None else exclude[s : s + step]
        return _knn_block(queries[s : s + step], ex, vectors, sq_norms, k)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
