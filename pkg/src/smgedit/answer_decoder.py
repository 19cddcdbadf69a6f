"""Answer reconstruction from the pooled selected-token vectors."""

from __future__ import annotations

import numpy as np

from . import tensor as T


def pool_selected(token_emb, mask):
    """Mean of the rows of ``token_emb`` where ``mask`` is 1.

    An all-zero mask yields the zero vector.  The divisor is
    ``max(sum(mask), 1)``, so gradients still reach the mask in that case.
    """
    mask = mask if isinstance(mask, T.Tensor) else T.Tensor(mask)
    if mask.shape[0] != token_emb.shape[0]:
        raise ValueError("pool_selected: mask and embeddings differ in length")
    weighted = T.matmul(mask, token_emb)
    count = T.clamp_min(T.total(mask), 1.0)
    return T.div(weighted, count)


def initial_state(store, condition):
    H = store["ans.lstm.b"].shape[0] // 4
    return T.reshape(T.linear(condition, store["ans.init.W"], store["ans.init.b"]), (2, H))


def answer_logprobs(store, condition, targets, bos):
    """Teacher-forced ``(L, V)`` log-probabilities for target ids ``targets``."""
    inputs = [bos] + list(targets[:-1])
    X = T.take_rows(store["emb"], inputs)
    Hs = T.lstm_sequence(X, store["ans.lstm.W"], store["ans.lstm.b"], initial_state(store, condition))
    return T.log_softmax(T.linear(Hs, store["ans.out.W"], store["ans.out.b"]))


def answer_loss(store, condition, targets, bos):
    """Negative log-likelihood of ``targets`` (ids, already ending in EOS if wanted)."""
    if len(targets) == 0:
        raise ValueError("answer_loss: empty answer")
    logp = answer_logprobs(store, condition, targets, bos)
    picked = T.index(logp, (np.arange(len(targets)), np.asarray(targets)))
    return -T.total(picked)


def generate_answer(store, condition, bos, eos, max_length=10):
    """Greedy decode; returns ids without the terminating EOS."""
    state = initial_state(store, condition)
    prev, out = bos, []
    emb, W, b = store["emb"], store["ans.lstm.W"], store["ans.lstm.b"]
    for _ in range(max_length):
        state = T.lstm_step(T.Tensor(emb.values[prev]), state, W, b)
        scores = store["ans.out.W"].values @ state.values[0] + store["ans.out.b"].values
        prev = int(scores.argmax())
        if prev == eos:
            break
        out.append(prev)
    return out
