"""Metric differential privacy for text via calibrated noise in word-embedding space."""

from .embeddings import EmbeddingModel, LoadOptions, load_embeddings
from .mechanism import MechanismConfig, PerturbationRecord, perturb_string, perturb_word
from .noise import NoiseConfig, NoiseSample, RandomStream

__version__ = "0.1.0"

__all__ = [
    "EmbeddingModel",
    "LoadOptions",
    "MechanismConfig",
    "NoiseConfig",
    "NoiseSample",
    "PerturbationRecord",
    "RandomStream",
    "load_embeddings",
    "perturb_string",
    "perturb_word",
]
