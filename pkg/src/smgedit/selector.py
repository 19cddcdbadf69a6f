"""Answer-mask selection over document tokens, plus the random baseline."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .corpus import MASK


def selector_logits(store, doc_emb, question_index):
    """Per-token two-way logits ``(n, 2)``; column 1 means "answer-related".

    The question embedding is concatenated to every token embedding before
    the BiLSTM.
    """
    n = doc_emb.shape[0]
    q = T.take_rows(store["question_emb"], [question_index])
    inp = T.concat([doc_emb, T.repeat_rows(T.reshape(q, (q.shape[1],)), n)], axis=1)
    states = T.bilstm_encode(inp, store["sel.fwd.W"], store["sel.fwd.b"],
                             store["sel.bwd.W"], store["sel.bwd.b"])
    return T.linear(states, store["sel.out.W"], store["sel.out.b"])


def sample_mask(logits, temperature=1.0, rng=None):
    """Mask tensor ``(n,)`` with hard 0/1 values.

    With an ``rng`` a straight-through Gumbel sample is drawn; without one
    the argmax of the logits is taken (no gradient).
    """
    if rng is None:
        return T.Tensor((logits.values[:, 1] > logits.values[:, 0]).astype(float))
    onehot = T.gumbel_binary_sample(logits, temperature, rng)
    return T.index(onehot, (slice(None), 1))


def complement(mask):
    mask = np.asarray(mask)
    return 1 - mask


def make_template(document, mask):
    if len(document) != len(mask):
        raise ValueError(f"document length {len(document)} != mask length {len(mask)}")
    return [MASK if m else tok for tok, m in zip(document, mask)]


def template_mask(template):
    """Inverse of :func:`make_template` for the mask part."""
    return np.array([1 if tok == MASK else 0 for tok in template], dtype=int)


def random_mask(length, probability, rng=None):
    if not 0.0 <= probability <= 1.0:
        raise ValueError("probability must lie in [0, 1]")
    if rng is None or isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    return (rng.random(length) < probability).astype(int)
