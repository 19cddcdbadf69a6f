"""Masked-context encoder, copy-augmented decoder with EOA head, and the losses.

Scores over the extended vocabulary: ids ``0..V-1`` are the model vocabulary,
ids ``V..`` are out-of-vocabulary tokens present in the copy sources.  An
extended id scores like ``<unk>`` on the generation side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .corpus import MASK


@dataclass
class ContextEncoding:
    states: T.Tensor   # (n, H) per-position encoder states
    pooled: T.Tensor   # (H,) element-wise max over positions


@dataclass
class CopySources:
    """Copyable tokens of the template and the answer, as a scatter matrix.

    ``scatter`` is ``(n_doc + n_ans, V_ext)`` with a single 1 per row for
    copyable positions and an all-zero row for blanks.
    """

    doc_ids: list          # extended ids per template position (-1 for blanks)
    ans_ids: list          # extended ids per answer position
    extra: list            # OOV tokens, in extended-id order
    vocab_size: int
    scatter: np.ndarray

    @property
    def size(self):
        return self.vocab_size + len(self.extra)

    def target_id(self, token, vocab):
        if token in vocab.stoi:
            return vocab.stoi[token]
        if token in self.extra:
            return self.vocab_size + self.extra.index(token)
        return vocab.unk

    def token(self, ext_id, vocab):
        if ext_id < self.vocab_size:
            return vocab.itos[ext_id]
        return self.extra[ext_id - self.vocab_size]

    def input_id(self, ext_id, vocab):
        return ext_id if ext_id < self.vocab_size else vocab.unk


def build_copy_sources(template, answer, vocab):
    V = len(vocab)
    extra = []

    def ext(tok):
        if tok in vocab.stoi:
            return vocab.stoi[tok]
        if tok not in extra:
            extra.append(tok)
        return V + extra.index(tok)

    doc_ids = [-1 if tok == MASK else ext(tok) for tok in template]
    ans_ids = [ext(tok) for tok in answer]
    scatter = np.zeros((len(doc_ids) + len(ans_ids), V + len(extra)))
    for row, col in enumerate(doc_ids + ans_ids):
        if col >= 0:
            scatter[row, col] = 1.0
    return CopySources(doc_ids, ans_ids, extra, V, scatter)


def encode_context(store, doc_emb, context_mask):
    """Encode ``context_mask``-scaled embeddings; max-pool the states."""
    m = context_mask if isinstance(context_mask, T.Tensor) else T.Tensor(np.asarray(context_mask, float))
    if m.shape[0] != doc_emb.shape[0]:
        raise ValueError("encode_context: mask and document differ in length")
    X = T.mul(doc_emb, T.reshape(m, (m.shape[0], 1)))
    states = T.lstm_sequence(X, store["enc.lstm.W"], store["enc.lstm.b"])
    return ContextEncoding(states, T.max_pool_over_time(states))


def answer_condition_vector(store, answer_ids):
    if len(answer_ids) == 0:
        raise ValueError("answer_condition_vector: empty answer")
    return T.mean(T.take_rows(store["emb"], answer_ids), axis=0)


def decoder_initial_state(store, enc):
    H = store["dec.lstm.b"].shape[0] // 4
    return T.reshape(T.linear(enc.pooled, store["dec.init.W"], store["dec.init.b"]), (2, H))


def output_heads(store, h):
    """Sigmoid split of ``h`` into word and EOA features, and their scores.

    Works for a single hidden vector or stacked ``(steps, H)`` rows.
    """
    split = T.sigmoid(T.linear(h, store["dec.split.W"], store["dec.split.b"]))
    K = split.shape[-1] // 2
    h_w = T.index(split, (..., slice(0, K)))
    h_eoa = T.index(split, (..., slice(K, 2 * K)))
    s_lstm = T.linear(h_w, store["dec.word.W"], store["dec.word.b"])
    eoa_logits = T.linear(h_eoa, store["dec.eoa.W"], store["dec.eoa.b"])
    return s_lstm, eoa_logits, h_w, h_eoa


def copy_scores(store, h, enc, answer_emb, sources):
    """Per-word copy scores: bilinear position scores summed per word type."""
    doc = T.matmul(T.matmul(h, store["copy.doc.W"]), T.transpose(enc.states))
    ans = T.matmul(T.matmul(h, store["copy.ans.W"]), T.transpose(answer_emb))
    per_position = T.concat([doc, ans], axis=-1)
    return T.matmul(per_position, T.Tensor(sources.scatter))


def copy_augmented_scores(store, s_lstm, h, enc, answer_emb, sources, vocab):
    cols = list(range(sources.vocab_size)) + [vocab.unk] * len(sources.extra)
    return T.add(T.take_cols(s_lstm, cols), copy_scores(store, h, enc, answer_emb, sources))


def copy_augmented_distribution(store, s_lstm, h, enc, answer_emb, sources, vocab):
    """``softmax(s_lstm + s_copy)`` over the extended vocabulary."""
    return T.softmax(copy_augmented_scores(store, s_lstm, h, enc, answer_emb, sources, vocab))


@dataclass
class DecoderStepOutput:
    scores: T.Tensor        # s_t over the extended vocabulary
    word_probs: T.Tensor    # softmax of scores
    eoa_probs: T.Tensor     # (p(eoa = 0), p(eoa = 1))
    h_w: T.Tensor
    h_eoa: T.Tensor
    state: T.Tensor         # (2, H) LSTM state after the step


def decoder_step(store, prev_id, cond, state, enc, answer_emb, sources, vocab):
    """One decoder step from input id ``prev_id`` (extended ids allowed)."""
    x = T.concat([T.take_rows(store["emb"], [sources.input_id(prev_id, vocab)])[0], cond])
    state = T.lstm_step(x, state, store["dec.lstm.W"], store["dec.lstm.b"])
    h = state[0]
    s_lstm, eoa_logits, h_w, h_eoa = output_heads(store, h)
    scores = copy_augmented_scores(store, s_lstm, h, enc, answer_emb, sources, vocab)
    return DecoderStepOutput(scores, T.softmax(scores), T.softmax(eoa_logits), h_w, h_eoa, state)


def decode_teacher_forced(store, targets, cond, enc, answer_emb, sources, vocab):
    """Word and EOA log-probabilities for every target step.

    Step ``t`` consumes target ``t-1`` (``<bos>`` first) and ``cond``.
    Returns ``(word_logp (steps, V_ext), eoa_logp (steps, 2))``.
    """
    inputs = [vocab.bos] + [sources.input_id(t, vocab) for t in targets[:-1]]
    steps = len(inputs)
    X = T.concat([T.take_rows(store["emb"], inputs), T.repeat_rows(cond, steps)], axis=1)
    Hs = T.lstm_sequence(X, store["dec.lstm.W"], store["dec.lstm.b"], decoder_initial_state(store, enc))
    s_lstm, eoa_logits, _, _ = output_heads(store, Hs)
    scores = copy_augmented_scores(store, s_lstm, Hs, enc, answer_emb, sources, vocab)
    return T.log_softmax(scores), T.log_softmax(eoa_logits)


def _pick(logp, targets):
    return T.index(logp, (np.arange(len(targets)), np.asarray(targets)))


def reconstruction_loss(word_logp, targets, mask):
    """``-sum_t m_t log p_t(y_t)``; only blank positions count."""
    mask = mask if isinstance(mask, T.Tensor) else T.Tensor(mask)
    return -T.total(T.mul(mask, _pick(word_logp, targets)))


def full_generation_loss(word_logp, targets):
    return -T.total(_pick(word_logp, targets))


def eoa_targets(mask, rule="corrected"):
    """Gold end-of-answer tags.

    ``corrected``: 1 at the last token of every run of 1s,
    ``max(m_t - m_{t+1}, 0)`` with ``m_{n+1} = 0``.
    ``printed``: ``max(m_{t-1} - m_t, 0)`` with ``m_0 = 0``, which can only be
    1 where ``m_t = 0``.
    """
    m = np.asarray(mask, dtype=int)
    if rule == "corrected":
        nxt = np.append(m[1:], 0)
        return np.maximum(m - nxt, 0)
    if rule == "printed":
        prev = np.insert(m[:-1], 0, 0)
        return np.maximum(prev - m, 0)
    raise ValueError(f"unknown eoa rule {rule!r}")


def eoa_loss_terms(targets, eoa_logp, mask):
    """Positive-class and negative-class parts of the EOA cross-entropy."""
    g = T.Tensor(np.asarray(targets, float))
    mask = mask if isinstance(mask, T.Tensor) else T.Tensor(mask)
    log_p0 = T.index(eoa_logp, (slice(None), 0))
    log_p1 = T.index(eoa_logp, (slice(None), 1))
    pos = -T.total(T.mul(T.mul(g, mask), log_p1))
    neg = -T.total(T.mul(T.mul(1.0 - g, mask), log_p0))
    return pos, neg


def eoa_loss(targets, eoa_logp, mask):
    pos, neg = eoa_loss_terms(targets, eoa_logp, mask)
    return T.add(pos, neg)


def total_loss(l_answer, l_recon, l_eoa, lambda_r=1.0, lambda_eoa=10.0):
    return l_answer + lambda_r * l_recon + lambda_eoa * l_eoa
