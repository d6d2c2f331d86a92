"""Plausible-deniability statistics for choosing epsilon.

For a word w the mechanism is run R times. ``unchanged_count`` counts runs
returning w itself (R times the estimate of N_w); ``distinct_outputs`` is the
number of distinct words returned, the usual empirical stand-in for the
effective support S_w. ``eta_support`` is the stricter version: the fewest
outputs whose empirical mass reaches 1 - eta.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from .embeddings import EmbeddingModel
from .mechanism import sample_outputs
from .noise import RandomStream

log = logging.getLogger(__name__)

DEFAULT_ETA = 0.01
CSV_COLUMNS = (
    "word", "epsilon", "runs", "unchanged_count", "distinct_outputs",
    "eta_support", "h0", "h_inf",
)


@dataclass(frozen=True)
class DeniabilityStats:
    word: str
    epsilon: float
    runs: int
    unchanged_count: int
    distinct_outputs: int
    eta: float | None = None
    eta_support: int | None = None

    @property
    def unchanged_frequency(self) -> float:
        return self.unchanged_count / self.runs


@dataclass(frozen=True)
class EntropyProxies:
    """Approximate extreme Renyi entropies, in nats.

    ``h_inf_clamped`` is set when the word never came back unchanged and the
    estimate used a count of 1 in place of 0.
    """

    h0: float
    h_inf: float
    h_inf_clamped: bool = False


def eta_support_from_counts(counts: np.ndarray, eta: float) -> int:
    """Smallest number of outputs whose empirical mass is at least ``1 - eta``."""
    if not 0.0 <= eta < 1.0:
        raise ValueError("eta must be in [0, 1)")
    counts = np.sort(counts[counts > 0])[::-1]
    total = counts.sum()
    need = (1.0 - eta) * total
    cum = np.cumsum(counts)
    # slack for (1 - eta) * total landing a hair above an exact integer
    k = int(np.searchsorted(cum, need - 1e-9 * total, side="left")) + 1
    return min(k, len(counts))


def stats_from_samples(
    word: str, word_id: int, epsilon: float, outputs: np.ndarray, eta: float | None
) -> DeniabilityStats:
    uniq, counts = np.unique(outputs, return_counts=True)
    unchanged = int(counts[uniq == word_id].sum())
    return DeniabilityStats(
        word=word,
        epsilon=float(epsilon),
        runs=len(outputs),
        unchanged_count=unchanged,
        distinct_outputs=len(uniq),
        eta=eta,
        eta_support=None if eta is None else eta_support_from_counts(counts, eta),
    )


def estimate_stats(
    model: EmbeddingModel,
    epsilon: float,
    word: str,
    runs: int,
    stream: RandomStream,
    eta: float | None = DEFAULT_ETA,
) -> DeniabilityStats:
    if runs < 1:
        raise ValueError("runs must be >= 1")
    i = model.index_of(word)
    outputs = sample_outputs(model, epsilon, i, runs, stream)
    return stats_from_samples(word, i, epsilon, outputs, eta)


def entropy_proxies(stats: DeniabilityStats) -> EntropyProxies:
    h0 = math.log(stats.distinct_outputs)
    clamped = stats.unchanged_count == 0
    h_inf = math.log(stats.runs / max(stats.unchanged_count, 1))
    return EntropyProxies(h0, h_inf, clamped)


def sample_words(model: EmbeddingModel, size: int, seed: int) -> list[str]:
    """Uniform sample without replacement, in draw order."""
    if not 1 <= size <= len(model):
        raise ValueError(f"sample size must be in [1, {len(model)}]")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x5A3D,)))
    return [model.words[i] for i in rng.choice(len(model), size=size, replace=False)]


@dataclass
class SweepResult:
    epsilons: list[float]
    words: list[str]
    runs: int
    seed: int
    eta: float | None
    stats: list[DeniabilityStats] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    def for_epsilon(self, epsilon: float) -> list[DeniabilityStats]:
        return [s for s in self.stats if s.epsilon == epsilon]

    def averages(self) -> dict[float, tuple[float, float]]:
        """Per-epsilon mean ``(unchanged_count, distinct_outputs)`` over the sample."""
        out = {}
        for e in self.epsilons:
            rows = self.for_epsilon(e)
            out[e] = (
                float(np.mean([s.unchanged_count for s in rows])),
                float(np.mean([s.distinct_outputs for s in rows])),
            )
        return out


def sweep(
    model: EmbeddingModel,
    epsilons: Sequence[float],
    words: Sequence[str],
    runs: int,
    seed: int,
    eta: float | None = DEFAULT_ETA,
    workers: int = 1,
) -> SweepResult:
    """Deniability stats for every ``(word, epsilon)`` pair.

    Task ``(word, epsilon)`` draws from the stream keyed by the word's row id
    and the epsilon's grid position, so results do not depend on ``workers``.
    OOV words are skipped with a warning.
    """
    if not epsilons or not words:
        raise ValueError("epsilon grid and word sample must be non-empty")
    epsilons = [float(e) for e in epsilons]
    result = SweepResult(epsilons, list(words), runs, seed, eta)
    tasks = []
    for w in words:
        i = model.lookup(w)
        if i is None:
            log.warning("skipping out-of-vocabulary word %r", w)
            result.skipped.append(w)
            continue
        for ei, e in enumerate(epsilons):
            tasks.append((w, i, ei, e))

    def run(task):
        w, i, ei, e = task
        outputs = sample_outputs(model, e, i, runs, RandomStream(seed, (i, ei)))
        return stats_from_samples(w, i, e, outputs, eta)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            result.stats = list(pool.map(run, tasks))
    else:
        result.stats = [run(t) for t in tasks]
    result.words = [w for w in words if w not in set(result.skipped)]
    return result


def _histogram(values: list[int], lo: int, hi: int, bins: int) -> dict:
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return {"edges": edges.tolist(), "counts": counts.tolist()}


def worst_case_summary(result: SweepResult, bins: int = 20) -> list[dict]:
    """Per-epsilon worst cases (min distinct outputs, max unchanged count) and histograms."""
    if not result.stats:
        raise ValueError("empty sweep")
    out = []
    for e in result.epsilons:
        rows = result.for_epsilon(e)
        if not rows:
            continue
        distinct = [s.distinct_outputs for s in rows]
        unchanged = [s.unchanged_count for s in rows]
        out.append({
            "epsilon": e,
            "words": len(rows),
            "runs": result.runs,
            "min_distinct_outputs": min(distinct),
            "max_unchanged_count": max(unchanged),
            "max_unchanged_frequency": max(unchanged) / result.runs,
            "mean_distinct_outputs": float(np.mean(distinct)),
            "mean_unchanged_count": float(np.mean(unchanged)),
            "distinct_histogram": _histogram(distinct, 0, result.runs, bins),
            "unchanged_histogram": _histogram(unchanged, 0, result.runs, bins),
        })
    return out


def _row(s: DeniabilityStats) -> dict:
    ent = entropy_proxies(s)
    return {
        "word": s.word,
        "epsilon": s.epsilon,
        "runs": s.runs,
        "unchanged_count": s.unchanged_count,
        "distinct_outputs": s.distinct_outputs,
        "eta_support": "" if s.eta_support is None else s.eta_support,
        "h0": ent.h0,
        "h_inf": ent.h_inf,
    }


def write_sweep_csv(result: SweepResult, fh: TextIO) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for s in result.stats:
        writer.writerow(_row(s))


def sweep_to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    write_sweep_csv(result, buf)
    return buf.getvalue()


def sweep_to_json(result: SweepResult, bins: int = 20) -> str:
    rows = []
    for s in result.stats:
        row = _row(s)
        row["eta_support"] = s.eta_support
        row["h_inf_clamped"] = entropy_proxies(s).h_inf_clamped
        rows.append(row)
    doc = {
        "metadata": {
            "runs": result.runs,
            "seed": result.seed,
            "eta": result.eta,
            "sample_size": len(result.words),
            "skipped": result.skipped,
            "support_estimator": "distinct outputs over runs; eta_support is the "
                                 "smallest empirical set reaching mass 1 - eta",
        },
        "epsilons": result.epsilons,
        "stats": rows,
        "summary": worst_case_summary(result, bins=bins),
    }
    return json.dumps(doc, indent=2)


def format_summary(summary: list[dict]) -> str:
    lines = []
    for s in summary:
        lines.append(
            f"epsilon={s['epsilon']:g}: min distinct outputs {s['min_distinct_outputs']}, "
            f"max unchanged {s['max_unchanged_count']}/{s['runs']} "
            f"over {s['words']} words"
        )
    return "\n".join(lines)


__all__ = [
    "CSV_COLUMNS",
    "DeniabilityStats",
    "EntropyProxies",
    "SweepResult",
    "entropy_proxies",
    "estimate_stats",
    "eta_support_from_counts",
    "format_summary",
    "sample_words",
    "sweep",
    "sweep_to_csv",
    "sweep_to_json",
    "worst_case_summary",
    "write_sweep_csv",
]

