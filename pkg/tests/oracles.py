"""Independent reference computations used to check the package."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, stats


def brute_force_knn(vectors: np.ndarray, i: int, k: int) -> list[tuple[int, float]]:
    """k nearest rows to row ``i`` by a plain per-row loop, self excluded."""
    v = np.asarray(vectors, dtype=np.float64)
    dists = []
    for j in range(len(v)):
        if j == i:
            continue
        dists.append((math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(v[i], v[j]))), j))
    dists.sort()
    return [(j, d) for d, j in dists[:k]]


def brute_force_nearest(vectors: np.ndarray, q) -> tuple[int, float]:
    best, best_d = -1, math.inf
    for j, row in enumerate(np.asarray(vectors, dtype=np.float64)):
        d = math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(row, q)))
        if d < best_d:
            best, best_d = j, d
    return best, best_d


def halfplane_stay_probability(separation: float, epsilon: float) -> float:
    """P(M(a) = a) on a 2-D, 2-word vocabulary a=(0,0), b=(separation,0).

    M(a) = b iff the noise lands beyond the bisector x = separation/2. The
    noise radius r ~ Gamma(2, 1/epsilon) and its angle is uniform, so for
    r > s = separation/2 the crossing probability is arccos(s/r)/pi.
    """
    s = separation / 2.0
    radius = stats.gamma(a=2, scale=1.0 / epsilon)

    def integrand(r):
        return radius.pdf(r) * math.acos(s / r) / math.pi

    escape, _ = integrate.quad(integrand, s, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    return 1.0 - escape


def full_scan_sorted(vectors: np.ndarray, i: int) -> tuple[np.ndarray, np.ndarray]:
    """All other rows ordered by (distance, index) from explicit differences."""
    v = np.asarray(vectors, dtype=np.float64)
    d = np.sqrt(((v - v[i]) ** 2).sum(axis=1))
    others = np.delete(np.arange(len(v)), i)
    d = d[others]
    order = np.lexsort((others, d))
    return others[order], d[order]
