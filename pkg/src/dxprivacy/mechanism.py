"""Word-level metric-DP perturbation: embed, add noise, snap to the nearest word.

Every in-vocabulary position receives its own independent noise draw, repeated
words included. Out-of-vocabulary tokens are not protected; they are handled
according to ``MechanismConfig.oov_policy``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .embeddings import EmbeddingModel
from .errors import WordNotFoundError
from .noise import NoiseConfig, RandomStream, sample_noise, sample_noise_batch

log = logging.getLogger(__name__)

OovPolicy = Literal["passthrough", "drop", "error"]

# Monte Carlo draws are generated in whole blocks of this size and truncated,
# so the first R outputs of a stream do not depend on how many are requested.
SAMPLE_BLOCK = 1024


@dataclass(frozen=True)
class MechanismConfig:
    epsilon: float
    oov_policy: OovPolicy = "passthrough"
    record_trace: bool = False

    def __post_init__(self) -> None:
        if not (self.epsilon > 0 and np.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be a positive finite number, got {self.epsilon}")
        if self.oov_policy not in ("passthrough", "drop", "error"):
            raise ValueError(f"unknown oov_policy {self.oov_policy!r}")


@dataclass(frozen=True)
class PerturbationRecord:
    position: int
    input_word: str
    output_word: str | None
    noise_norm: float
    oov: bool = False

    @property
    def changed(self) -> bool:
        return self.input_word != self.output_word

    def to_dict(self) -> dict:
        return {
            "position": self.position,
            "input_word": self.input_word,
            "output_word": self.output_word,
            "noise_norm": self.noise_norm,
            "changed": self.changed,
            "oov": self.oov,
        }


def tokenize(text: str) -> list[str]:
    return text.split()


def detokenize(tokens: Sequence[str]) -> str:
    return " ".join(tokens)


def perturb_word(
    model: EmbeddingModel, cfg: MechanismConfig, stream: RandomStream, word: str
) -> tuple[str, PerturbationRecord | None]:
    i = model.lookup(word)
    if i is None:
        raise WordNotFoundError(word)
    noise = sample_noise(stream, NoiseConfig(cfg.epsilon, model.dim))
    j, _ = model.nearest_word(model.vectors64[i] + noise.vector)
    out = model.word_of(j)
    rec = PerturbationRecord(0, word, out, noise.magnitude) if cfg.record_trace else None
    return out, rec


def _plan_oov(tokens: Sequence[str], model: EmbeddingModel, cfg: MechanismConfig, line=None):
    ids = []
    for pos, tok in enumerate(tokens):
        i = model.lookup(tok)
        if i is None and cfg.oov_policy == "error":
            err = WordNotFoundError(tok, pos)
            err.line = line
            raise err
        ids.append(i)
    return ids


def _assemble(tokens, ids, out_ids, norms, model, cfg):
    out: list[str] = []
    records: list[PerturbationRecord] = []
    k = 0
    for pos, (tok, i) in enumerate(zip(tokens, ids)):
        if i is None:
            if cfg.oov_policy == "passthrough":
                out.append(tok)
                records.append(PerturbationRecord(pos, tok, tok, 0.0, oov=True))
            else:
                records.append(PerturbationRecord(pos, tok, None, 0.0, oov=True))
            continue
        w = model.word_of(int(out_ids[k]))
        out.append(w)
        if cfg.record_trace:
            records.append(PerturbationRecord(pos, tok, w, float(norms[k])))
        k += 1
    return out, records


def _line_noise(stream: RandomStream, cfg: MechanismConfig, dim: int, count: int):
    noise = sample_noise_batch(stream, NoiseConfig(cfg.epsilon, dim), count)
    return noise, np.linalg.norm(noise, axis=1)


def perturb_string(
    model: EmbeddingModel,
    cfg: MechanismConfig,
    stream: RandomStream,
    tokens: Sequence[str],
) -> tuple[list[str], list[PerturbationRecord]]:
    """Perturb every in-vocabulary token independently.

    Returns the output tokens and the trace. OOV positions always produce a
    record (with ``oov=True``) so callers can count unprotected tokens; other
    positions are traced only when ``cfg.record_trace`` is set.
    """
    ids = _plan_oov(tokens, model, cfg)
    known = [i for i in ids if i is not None]
    if known:
        noise, norms = _line_noise(stream, cfg, model.dim, len(known))
        out_ids, _ = model.nearest_words(model.vectors64[known] + noise)
    else:
        out_ids, norms = np.empty(0, dtype=np.intp), np.empty(0)
    return _assemble(tokens, ids, out_ids, norms, model, cfg)


def perturb_corpus(
    model: EmbeddingModel,
    cfg: MechanismConfig,
    lines: Sequence[Sequence[str]],
    seed: int,
    start_index: int = 0,
) -> list[tuple[list[str], list[PerturbationRecord]]]:
    """Perturb a batch of tokenised records with one nearest-word pass.

    Record ``start_index + r`` draws from ``RandomStream(seed, start_index + r)``,
    so each line's output equals ``perturb_string`` on that stream no matter
    how the corpus is split into batches.
    """
    plans = [_plan_oov(t, model, cfg, line=start_index + r) for r, t in enumerate(lines)]
    queries, norms_all, spans = [], [], []
    offset = 0
    for r, ids in enumerate(plans):
        known = [i for i in ids if i is not None]
        if known:
            noise, norms = _line_noise(RandomStream(seed, start_index + r), cfg, model.dim, len(known))
            queries.append(model.vectors64[known] + noise)
            norms_all.append(norms)
        spans.append((offset, offset + len(known)))
        offset += len(known)
    if queries:
        out_ids, _ = model.nearest_words(np.vstack(queries))
        norms_flat = np.concatenate(norms_all)
    else:
        out_ids, norms_flat = np.empty(0, dtype=np.intp), np.empty(0)
    return [
        _assemble(tokens, ids, out_ids[a:b], norms_flat[a:b], model, cfg)
        for tokens, ids, (a, b) in zip(lines, plans, spans)
    ]


def sample_string_outputs(
    model: EmbeddingModel,
    epsilon: float,
    word_ids: Sequence[int],
    size: int,
    stream: RandomStream,
    noise_multiplier: float = 1.0,
    share_noise: bool = False,
) -> np.ndarray:
    """Run the mechanism ``size`` times on a string given as row ids.

    Returns a ``(size, len(word_ids))`` array of output row ids. The two
    keyword knobs exist only to build deliberately broken variants for
    auditing; the mechanism proper uses the defaults.
    """
    word_ids = np.asarray(word_ids, dtype=np.intp)
    length = len(word_ids)
    cfg = NoiseConfig(epsilon, model.dim)
    base = model.vectors64[word_ids]
    out = np.empty((size, length), dtype=np.intp)
    for start in range(0, size, SAMPLE_BLOCK):
        if share_noise:
            noise = sample_noise_batch(stream, cfg, SAMPLE_BLOCK)
            noise = np.repeat(noise, length, axis=0)
        else:
            noise = sample_noise_batch(stream, cfg, SAMPLE_BLOCK * length)
        if noise_multiplier != 1.0:
            noise *= noise_multiplier
        queries = np.tile(base, (SAMPLE_BLOCK, 1)) + noise
        ids, _ = model.nearest_words(queries)
        stop = min(SAMPLE_BLOCK, size - start)
        out[start : start + stop] = ids.reshape(SAMPLE_BLOCK, length)[:stop]
    return out


def sample_outputs(
    model: EmbeddingModel,
    epsilon: float,
    word_id: int,
    size: int,
    stream: RandomStream,
    noise_multiplier: float = 1.0,
) -> np.ndarray:
    """Output row ids of ``size`` independent runs of the mechanism on one word."""
    return sample_string_outputs(
        model, epsilon, [word_id], size, stream, noise_multiplier=noise_multiplier
    )[:, 0]


def output_counts(samples: np.ndarray, vocab_size: int) -> np.ndarray:
    return np.bincount(samples, minlength=vocab_size)


def count_oov(records: Iterable[PerturbationRecord]) -> int:
    return sum(1 for r in records if r.oov)
