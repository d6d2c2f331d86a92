"""Empirical audit of the metric-DP guarantee on small vocabularies.

For inputs w, w' and every output u observed often enough under both, the
log-likelihood ratio log(p_w(u) / p_w'(u)) is estimated from counts and
compared to epsilon * d(w, w'). The estimate's delta-method standard error is
sqrt(1/c_w + 1/c_w'); an output passes when its excess over the bound is at
most ``confidence_sigmas`` standard errors. This is a statistical check, not
a proof: outputs seen fewer than ``min_count`` times are not tested.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embeddings import EmbeddingModel
from .mechanism import sample_outputs, sample_string_outputs
from .noise import RandomStream

# named deliberate defects used to check that the audits have teeth
MUTANTS = {
    "none": {},
    # half-size noise is the mechanism at twice the claimed epsilon
    "halved-noise": {"noise_multiplier": 0.5},
    # one noise vector reused for every position of a string
    "shared-noise": {"share_noise": True},
}


@dataclass(frozen=True)
class AuditConfig:
    samples: int = 1_000_000
    min_count: int = 100
    confidence_sigmas: float = 3.0

    def __post_init__(self) -> None:
        if self.samples < 10_000:
            raise ValueError("samples must be >= 10^4")
        if self.min_count < 20:
            raise ValueError("min_count must be >= 20")
        if self.confidence_sigmas <= 0:
            raise ValueError("confidence_sigmas must be positive")


@dataclass(frozen=True)
class OutputAudit:
    word: str
    count: int
    count_other: int
    admitted: bool
    log_ratio: float | None = None
    standard_error: float | None = None
    slack: float | None = None


@dataclass
class PairAuditResult:
    word: str
    other: str
    epsilon: float
    distance: float
    samples: int
    confidence_sigmas: float
    outputs: list[OutputAudit] = field(default_factory=list)

    @property
    def admitted(self) -> list[OutputAudit]:
        return [o for o in self.outputs if o.admitted]

    @property
    def worst(self) -> OutputAudit | None:
        adm = self.admitted
        return max(adm, key=lambda o: o.slack) if adm else None

    @property
    def worst_slack(self) -> float:
        """Largest ``log_ratio - epsilon * d`` among admitted outputs (-inf if none)."""
        w = self.worst
        return -math.inf if w is None else w.slack

    @property
    def violations(self) -> list[OutputAudit]:
        k = self.confidence_sigmas
        return [o for o in self.admitted if o.slack > k * o.standard_error]

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        w = self.worst
        return {
            "word": self.word,
            "other": self.other,
            "epsilon": self.epsilon,
            "distance": self.distance,
            "bound": self.epsilon * self.distance,
            "samples": self.samples,
            "worst_slack": None if w is None else w.slack,
            "worst_band": None if w is None else self.confidence_sigmas * w.standard_error,
            "admitted_outputs": len(self.admitted),
            "verdict": "pass" if self.passed else "fail",
            "outputs": [o.__dict__ for o in self.outputs],
        }


def pair_from_counts(
    model: EmbeddingModel,
    epsilon: float,
    i: int,
    j: int,
    counts_i: np.ndarray,
    counts_j: np.ndarray,
    cfg: AuditConfig,
) -> PairAuditResult:
    d = model.string_distance([model.word_of(i)], [model.word_of(j)])
    res = PairAuditResult(
        model.word_of(i), model.word_of(j), float(epsilon), d,
        int(counts_i.sum()), cfg.confidence_sigmas,
    )
    n_i, n_j = counts_i.sum(), counts_j.sum()
    for u in np.flatnonzero((counts_i > 0) | (counts_j > 0)):
        ci, cj = int(counts_i[u]), int(counts_j[u])
        if ci >= cfg.min_count and cj >= cfg.min_count:
            lr = math.log(ci / n_i) - math.log(cj / n_j)
            se = math.sqrt(1.0 / ci + 1.0 / cj)
            res.outputs.append(
                OutputAudit(model.word_of(u), ci, cj, True, lr, se, lr - epsilon * d)
            )
        else:
            res.outputs.append(OutputAudit(model.word_of(u), ci, cj, False))
    return res


def audit_pair(
    model: EmbeddingModel,
    epsilon: float,
    word: str,
    other: str,
    cfg: AuditConfig,
    stream: RandomStream,
    mutant: str = "none",
) -> PairAuditResult:
    """Estimate both output distributions independently and test the ratio bound."""
    i, j = model.index_of(word), model.index_of(other)
    kw = MUTANTS[mutant]
    mult = kw.get("noise_multiplier", 1.0)
    ci = np.bincount(
        sample_outputs(model, epsilon, i, cfg.samples, stream.child(0), mult), minlength=len(model)
    )
    cj = np.bincount(
        sample_outputs(model, epsilon, j, cfg.samples, stream.child(1), mult), minlength=len(model)
    )
    return pair_from_counts(model, epsilon, i, j, ci, cj, cfg)


@dataclass
class AuditReport:
    epsilons: list[float]
    words: list[str]
    config: AuditConfig
    seed: int
    mutant: str = "none"
    pairs: list[PairAuditResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.pairs)

    def to_dict(self) -> dict:
        return {
            "verdict": "pass" if self.passed else "fail",
            "epsilons": self.epsilons,
            "words": self.words,
            "seed": self.seed,
            "mutant": self.mutant,
            "config": self.config.__dict__,
            "pairs_checked": len(self.pairs),
            "pairs_failed": sum(not p.passed for p in self.pairs),
            "pairs": [p.to_dict() for p in self.pairs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def audit_model(
    model: EmbeddingModel,
    epsilons: Sequence[float],
    cfg: AuditConfig,
    seed: int,
    words: Sequence[str] | None = None,
    mutant: str = "none",
) -> AuditReport:
    """Audit every ordered pair of distinct words at every epsilon.

    Each word's output distribution is estimated once per epsilon (stream
    keyed by epsilon position and row id) and reused across its pairs.
    """
    words = list(model.words if words is None else words)
    ids = [model.index_of(w) for w in words]
    mult = MUTANTS[mutant].get("noise_multiplier", 1.0)
    report = AuditReport([float(e) for e in epsilons], words, cfg, seed, mutant)
    for ei, eps in enumerate(report.epsilons):
        counts = {
            i: np.bincount(
                sample_outputs(model, eps, i, cfg.samples, RandomStream(seed, (ei, i)), mult),
                minlength=len(model),
            )
            for i in ids
        }
        for i in ids:
            for j in ids:
                if i != j:
                    report.pairs.append(pair_from_counts(model, eps, i, j, counts[i], counts[j], cfg))
    return report


@dataclass
class CompositionResult:
    words: tuple[str, str]
    epsilon: float
    samples: int
    total_variation: float
    tolerance: float
    joint: np.ndarray
    marginals: tuple[np.ndarray, np.ndarray]

    @property
    def passed(self) -> bool:
        return self.total_variation <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "words": list(self.words),
            "epsilon": self.epsilon,
            "samples": self.samples,
            "total_variation": self.total_variation,
            "tolerance": self.tolerance,
            "verdict": "pass" if self.passed else "fail",
        }


def audit_composition(
    model: EmbeddingModel,
    epsilon: float,
    x: Sequence[str],
    cfg: AuditConfig,
    stream: RandomStream,
    tolerance: float = 0.01,
    mutant: str = "none",
) -> CompositionResult:
    """Total variation between the joint output law of a 2-word string and the
    product of its per-word marginals, each estimated from separate runs."""
    if len(x) != 2:
        raise ValueError("composition audit takes exactly two words")
    ids = [model.index_of(w) for w in x]
    kw = MUTANTS[mutant]
    joint_out = sample_string_outputs(model, epsilon, ids, cfg.samples, stream.child(0), **kw)
    V = len(model)
    joint = np.bincount(joint_out[:, 0] * V + joint_out[:, 1], minlength=V * V).reshape(V, V)
    joint = joint / cfg.samples
    mult = kw.get("noise_multiplier", 1.0)
    m0 = np.bincount(sample_outputs(model, epsilon, ids[0], cfg.samples, stream.child(1), mult), minlength=V)
    m1 = np.bincount(sample_outputs(model, epsilon, ids[1], cfg.samples, stream.child(2), mult), minlength=V)
    m0, m1 = m0 / cfg.samples, m1 / cfg.samples
    tv = 0.5 * float(np.abs(joint - np.outer(m0, m1)).sum())
    return CompositionResult((x[0], x[1]), float(epsilon), cfg.samples, tv, tolerance, joint, (m0, m1))


@dataclass(frozen=True)
class OutputDistribution:
    word: str
    epsilon: float
    samples: int
    counts: dict[str, int]

    def probabilities(self) -> dict[str, float]:
        return {w: c / self.samples for w, c in self.counts.items()}

    def probability(self, word: str) -> float:
        return self.counts.get(word, 0) / self.samples

    def total_variation(self, other: "OutputDistribution") -> float:
        p, q = self.probabilities(), other.probabilities()
        return 0.5 * sum(abs(p.get(w, 0.0) - q.get(w, 0.0)) for w in set(p) | set(q))


def exhaustive_distribution(
    model: EmbeddingModel,
    epsilon: float,
    word: str,
    samples: int,
    stream: RandomStream,
) -> OutputDistribution:
    """Empirical output law of the mechanism on ``word``, by direct simulation."""
    i = model.index_of(word)
    counts = np.bincount(sample_outputs(model, epsilon, i, samples, stream), minlength=len(model))
    return OutputDistribution(
        word, float(epsilon), samples,
        {model.word_of(u): int(counts[u]) for u in np.flatnonzero(counts)},
    )
