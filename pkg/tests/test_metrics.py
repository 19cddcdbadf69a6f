import itertools
import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from smgedit.corpus import MASK
from smgedit.metrics import (
    BOUNDARY, KnLanguageModel, bleu, bow_f1, corpus_bleu, corpus_perplexity, diff_bleu_ratio,
    diff_sequence, evaluate, gold_template, ibleu, kn_perplexity, kn_train, lcs, lcs_tokens,
    parse_report, template_bleu,
)
from smgedit.metrics.lm import BOS, EOS, UNK

words = st.lists(st.sampled_from("abcde"), max_size=12)


# -- BLEU ------------------------------------------------------------------------------------


def brute_bleu(cand, ref):
    """Modified n-gram precision by explicit position enumeration."""
    if not cand:
        return 0.0
    logs = []
    for n in range(1, 5):
        grams = [tuple(cand[i:i + n]) for i in range(len(cand) - n + 1)]
        ref_grams = [tuple(ref[i:i + n]) for i in range(len(ref) - n + 1)]
        hits = 0
        for g in set(grams):
            hits += min(grams.count(g), ref_grams.count(g))
        total = len(grams)
        if hits == 0:
            if n == 1:
                return 0.0
            hits, total = 1, total + 1
        logs.append(math.log(hits / total))
    bp = 1.0 if len(cand) > len(ref) else math.exp(1 - len(ref) / len(cand))
    return 100 * bp * math.exp(sum(logs) / 4)


def test_bleu_worked_example():
    cand = "the cat sat on mat".split()
    ref = "the cat sat on the mat".split()
    expected = 100 * math.exp(-0.2) * (1 * 3 / 4 * 2 / 3 * 1 / 2) ** 0.25
    assert bleu(cand, ref) == pytest.approx(expected, abs=1e-9)


def test_bleu_identity_and_disjoint():
    assert bleu(list("abcdef"), list("abcdef")) == 100.0
    assert bleu(list("abc"), list("xyz")) == 0.0
    assert bleu([], list("abc")) == 0.0


def test_bleu_unsmoothed_zero_when_no_4gram():
    assert bleu(list("abcx"), list("abcy"), smooth=False) == 0.0
    assert bleu(list("abcx"), list("abcy")) > 0.0


def test_bleu_brute_force_oracle():
    rng = random.Random(0)
    for _ in range(50):
        cand = [rng.choice("abcd") for _ in range(rng.randint(1, 12))]
        ref = [rng.choice("abcd") for _ in range(rng.randint(1, 12))]
        assert bleu(cand, ref) == pytest.approx(brute_bleu(cand, ref), abs=1e-9)


@given(words, words)
def test_bleu_range(a, b):
    assert 0.0 <= bleu(a, b) <= 100.0 + 1e-9


def test_corpus_bleu_pools_statistics():
    c = [list("abcde"), list("xy")]
    r = [list("abcde"), list("xz")]
    assert corpus_bleu(c, r) != pytest.approx((bleu(c[0], r[0]) + bleu(c[1], r[1])) / 2)
    assert corpus_bleu(c[:1], r[:1]) == 100.0
    with pytest.raises(ValueError):
        corpus_bleu(c, r[:1])


def test_ibleu_examples():
    d = list("abcdef")
    assert ibleu(d, d, d) == pytest.approx(10.0, abs=1e-12)
    assert ibleu(d, d, list("uvwxyz")) == 100.0
    with pytest.raises(ValueError):
        ibleu(d, d, d, alpha=1.5)


def test_ibleu_compositional():
    rng = random.Random(1)
    for _ in range(20):
        c, g, o = ([rng.choice("abcd") for _ in range(rng.randint(1, 10))] for _ in range(3))
        assert ibleu(c, g, o, 0.7) == pytest.approx(brute_bleu(c, g) - 0.7 * brute_bleu(c, o), abs=1e-9)


# -- LCS and difference sequences -----------------------------------------------------------


def is_subsequence(sub, seq):
    it = iter(seq)
    return all(tok in it for tok in sub)


def brute_lcs_length(a, b):
    for k in range(min(len(a), len(b)), -1, -1):
        if any(is_subsequence([a[i] for i in idx], b) for idx in itertools.combinations(range(len(a)), k)):
            return k
    return 0


def test_lcs_examples():
    assert lcs_tokens(list("abcd"), list("abed")) == list("abd")
    assert lcs_tokens(list("abc"), list("abc")) == list("abc")
    assert lcs(list("abc"), list("xyz")) == []
    # ties go to the earliest position of the second sequence
    assert lcs(["a"], ["a", "a"]) == [(0, 0)]


def test_lcs_exhaustive_oracle():
    rng = random.Random(2)
    for _ in range(300):
        a = [rng.choice("abc") for _ in range(rng.randint(0, 10))]
        b = [rng.choice("abc") for _ in range(rng.randint(0, 10))]
        pairs = lcs(a, b)
        assert len(pairs) == brute_lcs_length(a, b)
        assert all(a[i] == b[j] for i, j in pairs)
        assert all(i1 < i2 and j1 < j2 for (i1, j1), (i2, j2) in zip(pairs, pairs[1:]))


def test_diff_examples():
    assert diff_sequence(list("abed"), list("abcd")) == ["e"]
    assert diff_sequence(["x", "a", "b", "y"], ["a", "b"]) == ["x", BOUNDARY, "y"]
    assert diff_sequence(list("abc"), list("abc")) == []


def test_diff_bleu_ratio_cases():
    d = "john smith is an english poet .".split()
    g = "john smith is an irish poet born in dublin .".split()
    assert diff_bleu_ratio(g, g, d) == 1.0
    assert diff_bleu_ratio(d, g, d) == 0.0
    # a one-token difference has no bigrams, yet smoothing keeps the denominator positive
    assert diff_bleu_ratio(list("abc"), list("abd"), list("abc")) == 0.0


def test_diff_bleu_ratio_undefined():
    # identical documents leave nothing to score
    assert diff_bleu_ratio(list("abc"), list("abc"), list("abc")) is None


def test_diff_bleu_ratio_compositional():
    rng = random.Random(3)
    for _ in range(30):
        o = [rng.choice("abcdef") for _ in range(rng.randint(3, 10))]
        g = list(o)
        g[rng.randrange(len(g))] = rng.choice("xyz")
        g.insert(rng.randrange(len(g)), rng.choice("xyz"))
        c = [rng.choice("abcxyz") for _ in range(rng.randint(1, 10))]
        diff = diff_sequence(g, o)
        expected = brute_bleu(c, diff) / brute_bleu(g, diff)
        assert diff_bleu_ratio(c, g, o) == pytest.approx(expected, abs=1e-9)


@given(words, words)
def test_ratio_of_gold_is_one_when_defined(g, o):
    r = diff_bleu_ratio(g, g, o)
    assert r is None or r == 1.0


# -- answer F1 and template BLEU -------------------------------------------------------------


def test_bow_f1_examples():
    assert bow_f1(list("aab"), list("abb")) == pytest.approx(2 / 3, abs=1e-15)
    assert bow_f1(list("ab"), list("ba")) == 1.0
    assert bow_f1(list("ab"), list("cd")) == 0.0
    assert bow_f1([], []) == 1.0
    assert bow_f1([], ["a"]) == 0.0


def test_bow_f1_multiset_oracle():
    rng = random.Random(4)
    for _ in range(50):
        a = [rng.choice("abc") for _ in range(rng.randint(1, 6))]
        b = [rng.choice("abc") for _ in range(rng.randint(1, 6))]
        common = sum(min(a.count(w), b.count(w)) for w in set(a))
        expected = 0.0 if common == 0 else 2 * common / (len(a) + len(b))
        assert bow_f1(a, b) == pytest.approx(expected, abs=1e-12)


@given(words, words)
def test_bow_f1_symmetric_and_order_free(a, b):
    assert bow_f1(a, b) == bow_f1(b, a)
    assert bow_f1(sorted(a), b) == bow_f1(a, b)


def test_template_bleu_cases():
    d = "john smith is an english poet .".split()
    g = "john smith is an irish poet .".split()
    gold = gold_template(d, g)
    perfect = [MASK if t == "english" else t for t in d]
    assert template_bleu(perfect, gold) == 100.0
    assert template_bleu([MASK] * len(d), gold) == 0.0
    rng = random.Random(5)
    doc = [f"w{i}" for i in range(12)]
    edited = doc[:4] + ["new"] + doc[5:]
    for _ in range(10):
        pred = [MASK if rng.random() < 0.3 else t for t in doc]
        expected = brute_bleu([t for t in pred if t != MASK], gold_template(doc, edited))
        assert template_bleu(pred, gold_template(doc, edited)) == pytest.approx(expected, abs=1e-9)


# -- Kneser-Ney ------------------------------------------------------------------------------


def test_kn_normalizes():
    rng = random.Random(6)
    corpus = [[rng.choice("abcdefg") for _ in range(rng.randint(3, 9))] for _ in range(40)]
    lm = kn_train(corpus, 3)
    symbols = list("abcdefgz") + [BOS]
    for _ in range(100):
        ctx = tuple(rng.choice(symbols) for _ in range(rng.randint(0, 3)))
        assert abs(sum(lm.distribution(ctx).values()) - 1.0) <= 1e-6


def test_kn_bigram_dominance():
    lm = kn_train([["a", "a", "a"]], 2)
    assert lm.prob("a", ["a"]) > lm.prob("zzz", ["a"]) > 0
    assert lm.map_token("zzz") == UNK


def test_kn_rejects_small_corpus():
    with pytest.raises(ValueError):
        kn_train([["a"]], 3)
    with pytest.raises(ValueError):
        kn_train([["a", "b", "c"]], 1)


def kn_oracle(corpus, w, u, v):
    """Interpolated trigram KN by direct counting over trigram occurrences."""
    occ = []
    for s in corpus:
        p = [BOS, BOS] + s + [EOS]
        occ += [tuple(p[i:i + 3]) for i in range(len(p) - 2)]
    vocab = {x for g in occ for x in g if x != BOS} | {UNK}
    n1 = sum(1 for bg in {g[1:] for g in occ} if sum(g[1:] == bg for g in occ) == 1)
    n2 = sum(1 for bg in {g[1:] for g in occ} if sum(g[1:] == bg for g in occ) == 2)
    D = n1 / (n1 + 2 * n2)
    tri_types = set(occ)
    bi_types = {g[1:] for g in tri_types}

    def p1(x):
        cont = bi_types
        num = sum(1 for g in cont if g[1] == x)
        total = len(cont)
        kinds = len({g[1] for g in cont})
        return max(num - D, 0) / total + D * kinds / total / len(vocab)

    def p2(x, b):
        # continuation counts: distinct left extensions of (b, x)
        rows = [g for g in tri_types if g[1] == b]
        if not rows:
            return p1(x)
        num = sum(1 for g in rows if g[2] == x)
        kinds = len({g[2] for g in rows})
        return max(num - D, 0) / len(rows) + D * kinds / len(rows) * p1(x)

    rows = [g for g in occ if g[:2] == (u, v)]
    if not rows:
        return p2(w, v)
    num = sum(1 for g in rows if g[2] == w)
    kinds = len({g[2] for g in rows})
    return max(num - D, 0) / len(rows) + D * kinds / len(rows) * p2(w, v)


def test_kn_trigram_oracle():
    corpus = ["the cat sat on the mat".split(), "the dog sat on the cat".split(),
              "a cat ran".split(), "the mat".split(), "the dog ran".split()]
    assert sum(len(s) for s in corpus) == 20
    lm = kn_train(corpus, 3)
    symbols = sorted({w for s in corpus for w in s}) + [EOS, UNK]
    for u in [BOS] + symbols[:6]:
        for v in symbols[:6]:
            for w in symbols:
                assert lm.prob(w, (u, v)) == pytest.approx(kn_oracle(corpus, w, u, v), abs=1e-12)


def test_training_text_beats_shuffled():
    rng = random.Random(7)
    subj, verbs, objs = ["the cat", "a dog", "my aunt", "the man"], ["sees", "likes", "hits"], ["a ball", "the tree"]
    corpus = [f"{rng.choice(subj)} {rng.choice(verbs)} {rng.choice(objs)} .".split() for _ in range(500)]
    lm = kn_train(corpus, 3)
    shuffled = [rng.sample(s, len(s)) for s in corpus]
    assert corpus_perplexity(lm, corpus) < corpus_perplexity(lm, shuffled)
    assert kn_perplexity(lm, corpus[0]) <= lm.vocab_size


class _Uniform(KnLanguageModel):
    def prob(self, word, context=()):
        return 1.0 / self.vocab_size


def test_uniform_perplexity_is_vocab_size():
    lm = _Uniform.from_json(kn_train([list("abcde")], 2).to_json())
    assert corpus_perplexity(lm, [list("abc"), list("ed")]) == pytest.approx(lm.vocab_size, rel=1e-12)


def test_kn_json_round_trip(tmp_path):
    lm = kn_train(["a b c a b".split()], 3)
    path = tmp_path / "lm.json"
    lm.save(path)
    back = KnLanguageModel.load(path)
    assert back.discount == lm.discount and back.prob("c", ("a", "b")) == lm.prob("c", ("a", "b"))


# -- report ----------------------------------------------------------------------------------


def test_report_identity():
    d = ["john smith is a poet .".split(), "ann is a painter .".split()]
    g = ["john smith is a singer .".split(), "ann is a french painter .".split()]
    r = evaluate(g, g, d)
    assert r.bleu == 100.0 and r.diff_bleu_ratio == 1.0 and r.diff_bleu_na == 0
    assert r.ibleu == pytest.approx(100 - 0.9 * corpus_bleu(g, d))
    parsed = parse_report(r.text())
    assert parsed["bleu"] == 100.0 and parsed["perplexity"] is None


def test_report_rejects_misaligned():
    with pytest.raises(ValueError):
        evaluate([["a"]], [["a"], ["b"]], [["a"]])
