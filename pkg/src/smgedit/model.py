"""The Select-Mask-Generate model: parameters, training loss and training loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import answer_decoder as ad
from . import context_codec as cc
from . import selector as sel
from . import tensor as T
from .config import RunConfig
from .corpus import MASK, Vocabulary
from .store import ParamStore, backward_and_update

log = logging.getLogger(__name__)


class UnknownQuestionError(KeyError):
    pass


def init_params(store, cfg, vocab_size, n_questions, rng):
    E, Hs, Hd = cfg.embedding_size, cfg.selector_hidden, cfg.decoder_hidden
    s = cfg.init_scale

    def u(*shape):
        return rng.uniform(-s, s, size=shape)

    def lstm(prefix, inp, hid):
        store.add(prefix + ".W", u(4 * hid, inp + hid))
        b = np.zeros(4 * hid)
        b[hid:2 * hid] = 1.0  # forget gate
        store.add(prefix + ".b", b)

    store.add("emb", u(vocab_size, E))
    store.add("question_emb", u(n_questions, E))
    lstm("sel.fwd", 2 * E, Hs)
    lstm("sel.bwd", 2 * E, Hs)
    store.add("sel.out.W", u(2, 2 * Hs))
    store.add("sel.out.b", np.zeros(2))
    store.add("ans.init.W", u(2 * Hd, E))
    store.add("ans.init.b", np.zeros(2 * Hd))
    lstm("ans.lstm", E, Hd)
    store.add("ans.out.W", u(vocab_size, Hd))
    store.add("ans.out.b", np.zeros(vocab_size))
    lstm("enc.lstm", E, Hd)
    store.add("dec.init.W", u(2 * Hd, Hd))
    store.add("dec.init.b", np.zeros(2 * Hd))
    lstm("dec.lstm", 2 * E, Hd)
    store.add("dec.split.W", u(2 * Hd, Hd))
    store.add("dec.split.b", np.zeros(2 * Hd))
    store.add("dec.word.W", u(vocab_size, Hd))
    store.add("dec.word.b", np.zeros(vocab_size))
    store.add("dec.eoa.W", u(2, Hd))
    store.add("dec.eoa.b", np.zeros(2))
    store.add("copy.doc.W", u(Hd, Hd))
    store.add("copy.ans.W", u(Hd, E))


SELECTOR_PARAMS = ("question_emb", "sel.fwd.W", "sel.fwd.b", "sel.bwd.W", "sel.bwd.b", "sel.out.W", "sel.out.b")


@dataclass
class LossParts:
    total: T.Tensor
    answer: T.Tensor
    recon: T.Tensor
    eoa: T.Tensor
    mask: np.ndarray


class SMGModel:
    """Parameters plus vocabulary and question inventory."""

    def __init__(self, cfg: RunConfig, vocab: Vocabulary, questions, store=None, rng=None):
        self.cfg = cfg
        self.vocab = vocab
        self.questions = list(questions)
        self.qindex = {q: i for i, q in enumerate(self.questions)}
        if store is None:
            store = ParamStore(cfg.optimizer, clip_norm=cfg.clip_norm or None)
            rng = rng if rng is not None else np.random.default_rng(cfg.seed)
            init_params(store, cfg, len(vocab), len(self.questions), rng)
        self.store = store

    # -- helpers ---------------------------------------------------------

    def question_index(self, question):
        try:
            return self.qindex[question]
        except KeyError:
            raise UnknownQuestionError(
                f"unknown question {question!r}; valid: {', '.join(self.questions)}"
            ) from None

    def embed(self, tokens):
        return T.take_rows(self.store["emb"], self.vocab.encode(tokens))

    # -- selector ----------------------------------------------------------

    def selector_logits(self, document, question):
        if not document:
            raise ValueError("empty document")
        return sel.selector_logits(self.store, self.embed(document), self.question_index(question))

    def select_mask(self, document, question, rng=None, temperature=None):
        """0/1 mask over ``document``; argmax without ``rng``, Gumbel sample with it."""
        logits = self.selector_logits(document, question)
        t = self.cfg.temperature if temperature is None else temperature
        return sel.sample_mask(logits, t, rng).values.astype(int)

    # -- answer decoder ----------------------------------------------------

    def answer_condition(self, document, mask):
        return ad.pool_selected(self.embed(document), T.Tensor(np.asarray(mask, float)))

    def generate_answer(self, document, question=None, mask=None, max_length=10):
        if mask is None:
            mask = self.select_mask(document, question)
        cond = self.answer_condition(document, mask)
        ids = ad.generate_answer(self.store, cond, self.vocab.bos, self.vocab.eos, max_length)
        return self.vocab.decode(ids)

    # -- training loss -------------------------------------------------------

    def loss(self, triple, rng=None, mask=None):
        """Total loss for one triple.

        ``mask`` fixes the selection (no Gumbel draw); otherwise a
        straight-through sample is drawn from ``rng``, or the argmax is used
        when ``rng`` is ``None``.
        """
        cfg, vocab, store = self.cfg, self.vocab, self.store
        doc, answer = triple.document, triple.answer
        doc_emb = self.embed(doc)
        if mask is None:
            logits = sel.selector_logits(store, doc_emb, self.question_index(triple.question))
            m = sel.sample_mask(logits, cfg.temperature, rng)
        else:
            m = T.Tensor(np.asarray(mask, float))
        hard = m.values.round().astype(int)
        # with selector_signal="answer" the context side sees the sample as a constant
        gate = m if cfg.selector_signal == "all" else T.Tensor(m.values)

        cond = ad.pool_selected(doc_emb, m)
        ans_ids = vocab.encode(answer) + [vocab.eos]
        l_answer = ad.answer_loss(store, cond, ans_ids, vocab.bos)

        enc = cc.encode_context(store, doc_emb, 1.0 - gate)
        template = sel.make_template(doc, hard)
        sources = cc.build_copy_sources(template, answer, vocab)
        answer_emb = self.embed(answer)
        v_a = T.mean(answer_emb, axis=0)
        targets = [sources.target_id(tok, vocab) for tok in doc]

        if cfg.mode == "seq2seq":
            word_logp, _ = cc.decode_teacher_forced(
                store, targets + [vocab.eos], v_a, enc, answer_emb, sources, vocab)
            l_recon = cc.full_generation_loss(word_logp, targets + [vocab.eos])
            l_eoa = T.Tensor(0.0)
        else:
            word_logp, eoa_logp = cc.decode_teacher_forced(store, targets, v_a, enc, answer_emb, sources, vocab)
            l_recon = cc.reconstruction_loss(word_logp, targets, gate)
            l_eoa = cc.eoa_loss(cc.eoa_targets(hard, cfg.eoa_rule), eoa_logp, gate)

        loss = cc.total_loss(l_answer, l_recon, l_eoa, cfg.lambda_r, cfg.lambda_eoa)
        if cfg.lambda_answer_ae:
            loss = loss + cfg.lambda_answer_ae * ad.answer_loss(store, v_a, ans_ids, vocab.bos)
        if cfg.selection_penalty:
            loss = loss + cfg.selection_penalty * T.total(m)
        return LossParts(loss, l_answer, l_recon, l_eoa, hard)

    # -- inference -------------------------------------------------------------

    def encode_template(self, template, answer):
        """Context encoding, copy sources and answer features for decoding."""
        vocab = self.vocab
        mask = sel.template_mask(template)
        plain = [vocab.itos[vocab.unk] if tok == MASK else tok for tok in template]
        enc = cc.encode_context(self.store, self.embed(plain), 1 - mask)
        sources = cc.build_copy_sources(template, answer, vocab)
        answer_emb = self.embed(answer)
        return enc, sources, answer_emb, T.mean(answer_emb, axis=0)


def train(model, triples, steps=None, rng=None, log_fh=None, on_step=None):
    """Minibatch training; returns the list of per-step mean loss parts.

    Each step draws ``cfg.batch_size`` triples (a seeded shuffle, epoch by
    epoch), sums their losses and takes one optimizer step.
    """
    cfg = model.cfg
    steps = cfg.steps if steps is None else steps
    rng = rng if rng is not None else np.random.default_rng(cfg.seed + 1)
    history = []
    order, pos = rng.permutation(len(triples)), 0
    for step in range(1, steps + 1):
        batch = []
        for _ in range(cfg.batch_size):
            if pos == len(order):
                order, pos = rng.permutation(len(triples)), 0
            batch.append(triples[order[pos]])
            pos += 1
        parts = [model.loss(t, rng) for t in batch]
        total = parts[0].total
        for p in parts[1:]:
            total = total + p.total
        row = (
            step,
            float(np.mean([p.answer.item() for p in parts])),
            float(np.mean([p.recon.item() for p in parts])),
            float(np.mean([p.eoa.item() for p in parts])),
            total.item() / len(parts),
        )
        backward_and_update(total * (1.0 / len(parts)), model.store, cfg.learning_rate)
        history.append(row)
        if log_fh is not None and (step % cfg.log_every == 0 or step == steps):
            log_fh.write("step=%d L_A=%.6f L_recon=%.6f L_eoa=%.6f L=%.6f\n" % row)
        if on_step is not None:
            on_step(row)
    return history
