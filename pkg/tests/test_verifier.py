import json
import math

import numpy as np
import pytest

from dxprivacy import toy
from dxprivacy.verifier import (
    AuditConfig,
    audit_composition,
    audit_model,
    audit_pair,
    exhaustive_distribution,
    pair_from_counts,
)
from dxprivacy.noise import RandomStream
from oracles import halfplane_stay_probability

# frozen from oracles.halfplane_stay_probability(1.0, eps); checked below
HALFPLANE_STAY = {
    0.5: 0.5776299566031435,
    1.0: 0.6479800332439976,
    2.0: 0.7614869274806796,
}


def test_config_limits():
    with pytest.raises(ValueError):
        AuditConfig(samples=9_999)
    with pytest.raises(ValueError):
        AuditConfig(min_count=19)
    with pytest.raises(ValueError):
        AuditConfig(confidence_sigmas=0)


def test_pair_from_counts_arithmetic(toy3):
    cfg = AuditConfig(samples=10_000, min_count=20)
    ci = np.array([600, 300, 100])
    cj = np.array([200, 790, 10])
    r = pair_from_counts(toy3, 1.0, 0, 1, ci, cj, cfg)
    assert r.distance == pytest.approx(math.sqrt(2))
    adm = {o.word: o for o in r.admitted}
    assert set(adm) == {"a", "b"}
    assert adm["a"].log_ratio == pytest.approx(math.log(3))
    assert adm["a"].standard_error == pytest.approx(math.sqrt(1 / 600 + 1 / 200))
    assert adm["a"].slack == pytest.approx(math.log(3) - math.sqrt(2))
    assert r.worst.word == "a" and r.passed
    # at epsilon 0.1 the bound is 0.141, far below the observed ln 3
    r = pair_from_counts(toy3, 0.1, 0, 1, ci, cj, cfg)
    assert not r.passed and r.violations[0].word == "a"


def test_identical_inputs(toy8):
    cfg = AuditConfig(samples=200_000, min_count=100)
    r = audit_pair(toy8, 2.0, "c", "c", cfg, RandomStream(1))
    assert r.distance == 0.0
    assert r.admitted
    for o in r.admitted:
        assert abs(o.log_ratio) <= cfg.confidence_sigmas * o.standard_error
    assert r.passed


def test_audit_pair_passes_on_real_mechanism(toy8):
    cfg = AuditConfig(samples=200_000)
    for w, v in (("a", "h"), ("h", "a"), ("b", "e")):
        r = audit_pair(toy8, 2.0, w, v, cfg, RandomStream(2))
        assert r.passed, r.to_dict()


def test_halved_noise_mutant_detected(toy8):
    cfg = AuditConfig(samples=200_000)
    report = audit_model(toy8, [2.0], cfg, seed=3, mutant="halved-noise")
    assert not report.passed
    assert any(p.worst_slack > 3 * p.worst.standard_error for p in report.pairs if p.worst)


def test_audit_model_covers_all_ordered_pairs(toy8):
    report = audit_model(toy8, [1.0, 4.0], AuditConfig(samples=50_000), seed=0)
    assert len(report.pairs) == 2 * 56
    assert report.passed
    doc = json.loads(report.to_json())
    assert doc["verdict"] == "pass" and doc["pairs_failed"] == 0
    assert doc["pairs"][0]["outputs"]


def test_composition_independent_positions(toy5):
    cfg = AuditConfig(samples=1_000_000)
    assert audit_composition(toy5, 1.0, ["a", "b"], cfg, RandomStream(4)).passed
    same = audit_composition(toy5, 1.0, ["a", "a"], cfg, RandomStream(5))
    np.testing.assert_allclose(same.marginals[0], same.marginals[1], atol=0.003)
    assert same.total_variation <= 0.01


def test_composition_shared_noise_mutant(toy5):
    cfg = AuditConfig(samples=100_000)
    res = audit_composition(toy5, 1.0, ["a", "b"], cfg, RandomStream(6), mutant="shared-noise")
    assert res.total_variation > 0.05 and not res.passed


def test_composition_requires_two_words(toy5):
    with pytest.raises(ValueError):
        audit_composition(toy5, 1.0, ["a"], AuditConfig(), RandomStream(0))


def test_exhaustive_distribution_normalised(toy5):
    d = exhaustive_distribution(toy5, 1.0, "a", 123_457, RandomStream(7))
    assert sum(d.counts.values()) == 123_457
    assert math.fsum(d.probabilities().values()) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("eps", sorted(HALFPLANE_STAY))
def test_halfplane_oracle_frozen_values(eps):
    assert halfplane_stay_probability(1.0, eps) == pytest.approx(HALFPLANE_STAY[eps], abs=1e-10)


@pytest.mark.parametrize("eps", sorted(HALFPLANE_STAY))
def test_two_word_stay_probability_matches_halfplane(eps):
    n = 1_000_000
    d = exhaustive_distribution(toy.two_word(1.0), eps, "a", n, RandomStream(8, int(eps * 10)))
    p = HALFPLANE_STAY[eps]
    assert abs(d.probability("a") - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_small_epsilon_distributions_agree(toy5):
    a = exhaustive_distribution(toy5, 0.001, "a", 100_000, RandomStream(9, 0))
    e = exhaustive_distribution(toy5, 0.001, "e", 100_000, RandomStream(9, 1))
    assert a.total_variation(e) <= 0.02
