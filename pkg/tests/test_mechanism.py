import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dxprivacy import toy
from dxprivacy.errors import WordNotFoundError
from dxprivacy.mechanism import (
    MechanismConfig,
    detokenize,
    perturb_corpus,
    perturb_string,
    perturb_word,
    sample_outputs,
    sample_string_outputs,
    tokenize,
)
from dxprivacy.noise import RandomStream


def test_config_validation():
    with pytest.raises(ValueError):
        MechanismConfig(0.0)
    with pytest.raises(ValueError):
        MechanismConfig(1.0, oov_policy="ignore")


def test_tokenize():
    assert tokenize("I want  beer") == ["I", "want", "beer"]
    assert tokenize(" \t　x\n") == ["x"]
    assert detokenize([]) == ""


@given(st.lists(st.text(alphabet=st.characters(blacklist_categories=("Zs", "Zl", "Zp", "Cc")), min_size=1), max_size=8))
def test_detokenize_tokenize_round_trip(tokens):
    s = detokenize(tokens)
    assert detokenize(tokenize(s)) == s


def test_large_epsilon_keeps_word():
    m = toy.two_word(10.0)
    cfg = MechanismConfig(100.0)
    s = RandomStream(0)
    kept = sum(perturb_word(m, cfg, s, "a")[0] == "a" for _ in range(1000))
    assert kept >= 999


def test_perturb_word_record_and_oov():
    m = toy.five_word()
    out, rec = perturb_word(m, MechanismConfig(1.0, record_trace=True), RandomStream(1), "a")
    assert out in m
    assert rec.input_word == "a" and rec.output_word == out
    assert rec.changed == (out != "a") and rec.noise_norm > 0
    assert perturb_word(m, MechanismConfig(1.0), RandomStream(1), "a")[1] is None
    with pytest.raises(WordNotFoundError):
        perturb_word(m, MechanismConfig(1.0), RandomStream(1), "zzz")


def test_tiny_epsilon_forgets_input():
    m = toy.two_word(10.0)
    n = 100_000
    pa = np.bincount(sample_outputs(m, 0.001, 0, n, RandomStream(2, 0)), minlength=2) / n
    pb = np.bincount(sample_outputs(m, 0.001, 1, n, RandomStream(2, 1)), minlength=2) / n
    assert 0.5 * np.abs(pa - pb).sum() <= 0.02


def test_empty_string():
    assert perturb_string(toy.five_word(), MechanismConfig(1.0), RandomStream(0), []) == ([], [])


def test_oov_policies():
    m = toy.five_word()
    x = ["a", "???", "b"]
    out, recs = perturb_string(m, MechanismConfig(2.0), RandomStream(0), x)
    assert len(out) == 3 and out[1] == "???"
    (r,) = recs
    assert r.oov and r.position == 1 and not r.changed

    out, recs = perturb_string(m, MechanismConfig(2.0, oov_policy="drop"), RandomStream(0), x)
    assert len(out) == 2
    assert recs[0].oov and recs[0].output_word is None and recs[0].changed

    with pytest.raises(WordNotFoundError) as exc:
        perturb_string(m, MechanismConfig(2.0, oov_policy="error"), RandomStream(0), x)
    assert exc.value.word == "???" and exc.value.position == 1


def test_oov_does_not_shift_other_positions():
    m = toy.five_word()
    cfg = MechanismConfig(1.5)
    plain, _ = perturb_string(m, cfg, RandomStream(4), ["a", "b"])
    mixed, _ = perturb_string(m, cfg, RandomStream(4), ["a", "oov", "b"])
    assert mixed == [plain[0], "oov", plain[1]]


@given(st.lists(st.sampled_from(["a", "b", "c", "d", "e", "OOV"]), max_size=20), st.integers(0, 2**32))
def test_length_preserved(tokens, seed):
    m = toy.five_word()
    for policy in ("passthrough",):
        out, _ = perturb_string(m, MechanismConfig(1.0, oov_policy=policy), RandomStream(seed), tokens)
        assert len(out) == len(tokens)


def test_trace_records():
    m = toy.five_word()
    out, recs = perturb_string(m, MechanismConfig(1.0, record_trace=True), RandomStream(3), ["a", "a", "c"])
    assert [r.position for r in recs] == [0, 1, 2]
    assert [r.output_word for r in recs] == out
    for r in recs:
        assert r.changed == (r.input_word != r.output_word)
    # repeated words get independent draws
    assert recs[0].noise_norm != recs[1].noise_norm


def test_repeated_word_outputs_vary():
    m = toy.five_word()
    out, _ = perturb_string(m, MechanismConfig(0.5), RandomStream(1), ["a"] * 200)
    assert len(set(out)) > 1


def test_corpus_matches_per_line_streams():
    m = toy.five_word()
    cfg = MechanismConfig(1.0, record_trace=True)
    lines = [["a", "b"], [], ["e", "x", "e", "e"], ["c"]]
    batch = perturb_corpus(m, cfg, lines, seed=17, start_index=40)
    for r, line in enumerate(lines):
        assert batch[r] == perturb_string(m, cfg, RandomStream(17, 40 + r), line)


def test_full_support_at_finite_epsilon():
    m = toy.five_word()
    out = sample_outputs(m, 1.0, 0, 100_000, RandomStream(5))
    assert set(np.unique(out)) == set(range(5))


def test_sample_outputs_prefix_property():
    m = toy.five_word()
    a = sample_outputs(m, 1.0, 0, 700, RandomStream(6))
    b = sample_outputs(m, 1.0, 0, 3000, RandomStream(6))
    assert (a == b[:700]).all()


def test_distance_monotone_likelihood():
    # w1 at distance 1 and w2 at distance 2 both own slab-shaped Voronoi cells
    m = toy.line_model(5, 1.0)
    n = 1_000_000
    p = np.bincount(sample_outputs(m, 1.0, 0, n, RandomStream(7)), minlength=5) / n
    gap = p[1] - p[2]
    pooled_se = np.sqrt(p[1] * (1 - p[1]) / n + p[2] * (1 - p[2]) / n)
    assert gap > 5 * pooled_se
    assert p[2] > p[3]


def test_fixed_point_limit(clustered50):
    rng = np.random.default_rng(1)
    ids = rng.choice(len(clustered50), 20, replace=False)
    _, nn = clustered50.k_nearest_ids(ids, 1)
    eps = clustered50.dim / (0.24 * nn.min())  # mean noise norm n/eps < nn/4
    for i in ids:
        out = sample_outputs(clustered50, eps, i, 1000, RandomStream(8, int(i)))
        assert (out == i).mean() >= 0.99


def test_composition_vectorised_path():
    m = toy.five_word()
    n = 1_000_000
    out = sample_string_outputs(m, 1.0, [0, 1], n, RandomStream(9, 0))
    joint = np.bincount(out[:, 0] * 5 + out[:, 1], minlength=25).reshape(5, 5) / n
    ma = np.bincount(sample_outputs(m, 1.0, 0, n, RandomStream(9, 1)), minlength=5) / n
    mb = np.bincount(sample_outputs(m, 1.0, 1, n, RandomStream(9, 2)), minlength=5) / n
    assert 0.5 * np.abs(joint - np.outer(ma, mb)).sum() <= 0.01


def test_string_path_agrees_with_vectorised_path():
    # perturb_string and the Monte Carlo sampler use different draw layouts;
    # they must still have the same output law
    m = toy.five_word()
    cfg = MechanismConfig(1.0)
    s = RandomStream(10)
    out, _ = perturb_string(m, cfg, s, ["b"] * 20_000)
    p1 = np.bincount([m.lookup(w) for w in out], minlength=5) / 20_000
    p2 = np.bincount(sample_outputs(m, 1.0, 1, 200_000, RandomStream(11)), minlength=5) / 200_000
    assert 0.5 * np.abs(p1 - p2).sum() < 0.02


GLOVE_300 = os.environ.get("DXPRIVACY_GLOVE_300D")


@pytest.mark.skipif(not GLOVE_300, reason="set DXPRIVACY_GLOVE_300D to a GloVe 300d text file")
def test_hockey_neighbourhood_on_glove():
    from dxprivacy.embeddings import load_embeddings

    m = load_embeddings(GLOVE_300)
    i = m.index_of("hockey")
    # choose epsilon so that roughly 30% of runs return the input
    outputs = None
    for eps in (20, 30, 40, 50, 60, 80):
        outputs = sample_outputs(m, eps, i, 1000, RandomStream(0, eps))
        if (outputs == i).mean() >= 0.3:
            break
    near = {j for j, _ in m.k_nearest("hockey", 200)} | {i}
    assert np.isin(outputs, list(near)).mean() > 0.5
