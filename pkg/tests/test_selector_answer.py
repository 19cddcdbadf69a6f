import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smgedit import answer_decoder as ad
from smgedit import selector as sel
from smgedit import tensor as T
from smgedit.corpus import MASK, Triple
from smgedit.model import UnknownQuestionError, train

from gradcheck import check


@pytest.fixture
def model(tiny_model):
    return tiny_model


# -- selector -------------------------------------------------------------------------


def test_mask_shape_and_values(model):
    doc = "ann smith is a poet .".split()
    for seed in range(5):
        m = model.select_mask(doc, "name", rng=np.random.default_rng(seed))
        assert m.shape == (len(doc),) and set(m.tolist()) <= {0, 1}


def test_mask_seed_replay(model):
    doc = "ann smith is a poet .".split()
    a = model.select_mask(doc, "name", rng=np.random.default_rng(11))
    b = model.select_mask(doc, "name", rng=np.random.default_rng(11))
    assert np.array_equal(a, b)
    assert np.array_equal(model.select_mask(doc, "name"), model.select_mask(doc, "name"))


def test_unknown_question(model):
    with pytest.raises(UnknownQuestionError, match="name"):
        model.select_mask(["ann"], "death cause")


def test_empty_document_rejected(model):
    with pytest.raises(ValueError):
        model.select_mask([], "name")


def test_complement_examples():
    assert sel.complement([0, 1, 1, 0]).tolist() == [1, 0, 0, 1]
    assert sel.complement(np.zeros(4, int)).tolist() == [1, 1, 1, 1]


@given(st.lists(st.integers(0, 1), max_size=30))
def test_complement_involution(mask):
    assert sel.complement(sel.complement(mask)).tolist() == mask


def test_template_examples():
    assert sel.make_template(["a", "b", "c"], [0, 1, 0]) == ["a", MASK, "c"]
    assert sel.make_template(["a", "b"], [0, 0]) == ["a", "b"]
    assert sel.make_template(["a", "b"], [1, 1]) == [MASK, MASK]
    with pytest.raises(ValueError):
        sel.make_template(["a"], [0, 1])


@given(st.lists(st.integers(0, 1), min_size=1, max_size=30))
def test_template_mask_round_trip(mask):
    doc = [f"w{i}" for i in range(len(mask))]
    assert sel.template_mask(sel.make_template(doc, mask)).tolist() == mask


def test_random_mask_examples():
    assert sel.random_mask(50, 0.0, 1).sum() == 0
    assert sel.random_mask(50, 1.0, 1).sum() == 50
    assert abs(sel.random_mask(10000, 0.1, 7).sum() - 1000) <= 100
    with pytest.raises(ValueError):
        sel.random_mask(3, 1.5)


def test_selector_gets_gradient_from_recon_and_answer(model):
    t = Triple("name", "ann smith is a poet .".split(), ["ann", "smith"])
    rng = np.random.default_rng(0)
    for name in ("answer", "recon"):
        model.store.zero_grad()
        parts = model.loss(t, rng=np.random.default_rng(4))
        T.backward(getattr(parts, name))
        g = model.store["sel.out.W"].grad
        assert g is not None and np.linalg.norm(g) > 0, name
    del rng


def test_one_training_step_moves_selector(model):
    t = Triple("name", "ann smith is a poet .".split(), ["ann", "smith"])
    before = model.store["sel.out.W"].values.copy()
    train(model, [t], steps=1, rng=np.random.default_rng(0))
    assert np.linalg.norm(model.store["sel.out.W"].values - before) > 0


# -- answer decoder -------------------------------------------------------------------


def test_pool_examples():
    v = T.Tensor([[1.0, 2.0], [3.0, 6.0]])
    assert np.array_equal(ad.pool_selected(v, [1, 0]).values, [1.0, 2.0])
    assert np.array_equal(ad.pool_selected(v, [1, 1]).values, [2.0, 4.0])
    assert np.array_equal(ad.pool_selected(v, [0, 0]).values, [0.0, 0.0])


def test_answer_loss_uniform_decoder(model):
    store = model.store
    V = store["ans.out.W"].shape[0]
    saved = store["ans.out.W"].values.copy()
    store["ans.out.W"].values[...] = 0.0
    store["ans.out.b"].values[...] = 0.0
    targets = [5, 6, 3]
    loss = ad.answer_loss(store, T.Tensor(np.ones(6)), targets, model.vocab.bos).item()
    assert loss == pytest.approx(3 * math.log(V), rel=1e-12)
    store["ans.out.W"].values[...] = saved


def test_answer_loss_matches_step_walk(model):
    store, vocab = model.store, model.vocab
    rng = np.random.default_rng(8)
    for _ in range(5):
        cond = rng.normal(size=6)
        targets = rng.integers(5, len(vocab), size=4).tolist()
        loss = ad.answer_loss(store, T.Tensor(cond), targets, vocab.bos).item()
        # independent walk in plain numpy
        emb, W, b = store["emb"].values, store["ans.lstm.W"].values, store["ans.lstm.b"].values
        H = b.shape[0] // 4
        hc = store["ans.init.W"].values @ cond + store["ans.init.b"].values
        h, c = hc[:H], hc[H:]
        expected, prev = 0.0, vocab.bos
        sig = lambda z: 1 / (1 + np.exp(-z))
        for y in targets:
            z = W @ np.concatenate([emb[prev], h]) + b
            i, f, g, o = sig(z[:H]), sig(z[H:2 * H]), np.tanh(z[2 * H:3 * H]), sig(z[3 * H:])
            c = f * c + i * g
            h = o * np.tanh(c)
            s = store["ans.out.W"].values @ h + store["ans.out.b"].values
            expected -= s[y] - np.log(np.exp(s - s.max()).sum()) - s.max()
            prev = y
        assert loss == pytest.approx(expected, rel=1e-12)


def test_answer_loss_nonnegative_and_rejects_empty(model):
    assert ad.answer_loss(model.store, T.Tensor(np.zeros(6)), [5], model.vocab.bos).item() >= 0
    with pytest.raises(ValueError):
        ad.answer_loss(model.store, T.Tensor(np.zeros(6)), [], model.vocab.bos)


def test_answer_loss_gradient(model):
    store = model.store
    rng = np.random.default_rng(1)
    cond = T.Tensor(rng.normal(size=6), requires_grad=True)
    params = {"cond": cond, **{k: store[k] for k in ("ans.init.W", "ans.lstm.W", "ans.out.W", "ans.out.b")}}
    f = lambda: ad.answer_loss(store, cond, [5, 7, 3], model.vocab.bos)
    assert check(f, params, rng, points=120) <= 1e-4


def test_generate_answer_bounded_and_deterministic(model):
    cond = T.Tensor(np.linspace(-1, 1, 6))
    a = ad.generate_answer(model.store, cond, model.vocab.bos, model.vocab.eos, max_length=4)
    b = ad.generate_answer(model.store, cond, model.vocab.bos, model.vocab.eos, max_length=4)
    assert a == b and len(a) <= 4


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=6, max_size=6).filter(lambda m: sum(m) >= 2))
def test_pool_gradient_reaches_mask(mask):
    # a single selection sits on the divisor clamp, where the derivative is one-sided
    rng = np.random.default_rng(sum(mask))
    X = T.Tensor(rng.normal(size=(6, 3)))
    m = T.Tensor(np.array(mask, float), requires_grad=True)
    c = rng.normal(size=3)
    f = lambda: T.total(T.mul(ad.pool_selected(X, m), c))
    assert check(f, {"m": m}, rng, points=6) <= 1e-6
