"""Sampling from the n-dimensional density p(z) proportional to exp(-epsilon * |z|).

A draw is an isotropic unit direction (a normalised standard normal vector)
scaled by a radius drawn from Gamma(shape=n, scale=1/epsilon).

Randomness is organised in keyed streams: ``RandomStream(seed, key)`` wraps a
PCG64 generator seeded from ``SeedSequence(seed, spawn_key=key)``. Equal
``(seed, key)`` pairs give bit-identical sequences on every platform, and
child keys give statistically independent streams, so parallel workers can
each own a stream without coordinating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseConfig:
    epsilon: float
    dim: int

    def __post_init__(self) -> None:
        if not (self.epsilon > 0 and np.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be a positive finite number, got {self.epsilon}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")

    @property
    def scale(self) -> float:
        return 1.0 / self.epsilon


class RandomStream:
    """A single-owner deterministic random stream.

    ``stream_id`` may be an int or a tuple of ints; it becomes the
    ``spawn_key`` of the underlying ``SeedSequence``.
    """

    __slots__ = ("seed", "key", "rng")

    def __init__(self, seed: int, stream_id: int | tuple[int, ...] = 0) -> None:
        key = (stream_id,) if isinstance(stream_id, (int, np.integer)) else tuple(stream_id)
        if any(int(k) < 0 for k in key):
            raise ValueError("stream ids must be non-negative")
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(self.seed & 0xFFFFFFFFFFFFFFFF, spawn_key=self.key)
        self.rng = np.random.Generator(np.random.PCG64(ss))

    def child(self, *ids: int) -> "RandomStream":
        """Independent stream keyed by this stream's key extended with ``ids``."""
        return RandomStream(self.seed, self.key + tuple(ids))

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, key={self.key})"


@dataclass(frozen=True)
class NoiseSample:
    direction: np.ndarray
    magnitude: float

    @property
    def vector(self) -> np.ndarray:
        return self.magnitude * self.direction


def _unit_rows(rng: np.random.Generator, size: int, n: int) -> np.ndarray:
    v = rng.standard_normal((size, n))
    norms = np.linalg.norm(v, axis=1)
    # an exactly-zero normal vector has probability zero but would divide by 0
    bad = np.flatnonzero(norms == 0.0)
    while bad.size:
        v[bad] = rng.standard_normal((bad.size, n))
        norms[bad] = np.linalg.norm(v[bad], axis=1)
        bad = bad[norms[bad] == 0.0]
    v /= norms[:, None]
    return v


def sample_direction(stream: RandomStream, n: int) -> np.ndarray:
    """Uniformly distributed point on the unit sphere in R^n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _unit_rows(stream.rng, 1, n)[0]


def sample_magnitude(stream: RandomStream, cfg: NoiseConfig) -> float:
    return float(stream.rng.gamma(cfg.dim, cfg.scale))


def sample_noise(stream: RandomStream, cfg: NoiseConfig) -> NoiseSample:
    direction = sample_direction(stream, cfg.dim)
    return NoiseSample(direction, sample_magnitude(stream, cfg))


def sample_directions(stream: RandomStream, n: int, size: int) -> np.ndarray:
    return _unit_rows(stream.rng, size, n)


def sample_magnitudes(stream: RandomStream, cfg: NoiseConfig, size: int) -> np.ndarray:
    return stream.rng.gamma(cfg.dim, cfg.scale, size)


def sample_noise_batch(stream: RandomStream, cfg: NoiseConfig, size: int) -> np.ndarray:
    """``size`` noise vectors as a ``(size, dim)`` float64 array.

    Consumes ``size * dim`` normals followed by ``size`` gamma variates, so a
    batch of one draws the same values as :func:`sample_noise`.
    """
    directions = _unit_rows(stream.rng, size, cfg.dim)
    radii = stream.rng.gamma(cfg.dim, cfg.scale, size)
    directions *= radii[:, None]
    return directions
