"""Read/write partial decoding of a context template.

The decoder alternates between *reading* template tokens verbatim and
*writing* generated tokens into blanks (``[M]`` runs).  :func:`transition` is
the pure state machine; :func:`partial_decode` drives it with any predictor,
either a trained model (:class:`ModelPredictor`) or a fixed script
(:class:`ScriptedPredictor`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import context_codec as cc
from .corpus import BOS, MASK


@dataclass(frozen=True)
class DecodeState:
    mode: int = 0          # 0 reading, 1 writing
    cursor: int = 0        # index into the template
    written: int = 0       # tokens written into the current blank
    x_in: object = None    # current input token


def _at(template, i):
    return template[i] if i < len(template) else None


def transition(state, template, token, eoa, l_max=10, allow_empty_fill=False):
    """Advance one time step; returns ``(new_state, emitted_token_or_None)``.

    Reading mode emits ``template[cursor]``.  When the next position opens a
    blank, the cursor jumps past the whole ``[M]`` run and writing starts;
    with ``allow_empty_fill`` an ``eoa`` signal at that point skips the blank
    instead.  Writing mode emits ``token`` and returns to reading after an
    ``eoa`` signal or ``l_max`` tokens.  Reading past the end of the template
    is terminal: nothing is emitted and the state is unchanged.
    """
    S, i, lg = state.mode, state.cursor, state.written
    emitted = None
    if S == 0:
        cur = _at(template, i)
        if cur is None:
            return state, None
        if cur == MASK:
            # only reachable when the template itself starts with a blank
            while _at(template, i) == MASK:
                i += 1
            if not (allow_empty_fill and eoa):
                S = 1
        else:
            emitted = cur
            if _at(template, i + 1) == MASK:
                i += 1
                while _at(template, i) == MASK:
                    i += 1
                if not (allow_empty_fill and eoa):
                    S = 1
            else:
                i += 1
    else:
        emitted = token
        lg += 1
        if eoa or lg >= l_max:
            S, lg = 0, 0
    x_in = _at(template, i) if S == 0 else token
    return DecodeState(S, i, lg, x_in), emitted


class ScriptedPredictor:
    """Test double returning queued ``(token, eoa)`` pairs, one per step.

    With ``read_steps=False`` the script only covers writing steps; reading
    steps get ``("<pad>", 0)`` without consuming it.
    """

    def __init__(self, script, default=("<pad>", 0), read_steps=True):
        self.script = list(script)
        self.default = default
        self.read_steps = read_steps
        self.calls = 0

    def __call__(self, context, state):
        self.calls += 1
        if state.mode == 0 and not self.read_steps:
            return "<pad>", 0
        if self.script:
            return self.script.pop(0)
        return self.default


class ModelPredictor:
    """Greedy next-token and EOA predictions from a trained model.

    Called with the token prefix decoded so far; the decoder LSTM consumes
    whatever part of the prefix it has not seen yet and predicts the token
    that follows.  The new answer conditions the decoder and is a copy
    source.
    """

    def __init__(self, model, template, new_answer):
        self.model = model
        self.enc, self.sources, self.answer_emb, self.cond = model.encode_template(template, new_answer)
        self.state = cc.decoder_initial_state(model.store, self.enc)
        self.prev = model.vocab.bos
        self.consumed = 0
        self.cached = None

    def _feed(self, ext_id):
        m = self.model
        out = cc.decoder_step(m.store, ext_id, self.cond, self.state, self.enc,
                              self.answer_emb, self.sources, m.vocab)
        self.state = out.state
        self.cached = out

    def __call__(self, context, state):
        vocab = self.model.vocab
        if self.cached is None:
            self._feed(vocab.bos)
        for tok in context[self.consumed:]:
            self._feed(self.sources.target_id(tok, vocab))
        self.consumed = len(context)
        out = self.cached
        scores = out.scores.values.copy()
        for banned in (vocab.pad, vocab.bos, vocab.mask, vocab.eos):
            scores[banned] = -np.inf
        ext_id = int(scores.argmax())
        eoa = int(out.eoa_probs.values[1] > out.eoa_probs.values[0])
        return self.sources.token(ext_id, vocab), eoa


@dataclass
class PartialDecodeResult:
    tokens: list
    fills: list = field(default_factory=list)   # one token list per writing episode
    steps: int = 0
    truncated: bool = False
    skipped: int = 0                             # blanks skipped by an immediate EOA


def partial_decode(template, predictor, l_max=10, max_total_steps=None, allow_empty_fill=False):
    """Fill every blank of ``template`` using ``predictor``.

    ``predictor(context, state)`` returns ``(token, eoa)``; ``context`` is the
    decoded prefix, extended by the template token being read in reading
    mode.  A template starting with a blank gets a virtual ``<bos>`` in front
    so that writing can begin immediately; it is not part of the output.
    """
    if not template:
        raise ValueError("empty template")
    if l_max < 1:
        raise ValueError("l_max must be at least 1")
    template = list(template)
    lead = template[0] == MASK
    if lead:
        template = [BOS] + template
    if max_total_steps is None:
        runs = count_mask_runs(template)
        max_total_steps = len(template) + l_max * runs
    state = DecodeState(x_in=template[0])
    out, fills, steps, skipped = [], [], 0, 0
    while True:
        if state.mode == 0 and state.cursor >= len(template):
            break
        if steps >= max_total_steps:
            return PartialDecodeResult(_strip(out, lead), fills, steps, True, skipped)
        context = out + [template[state.cursor]] if state.mode == 0 else out
        token, eoa = predictor(_strip(context, lead), state)
        new, emitted = transition(state, template, token, eoa, l_max, allow_empty_fill)
        steps += 1
        if emitted is not None:
            out.append(emitted)
            if state.mode == 1:
                fills[-1].append(emitted)
        opens_blank = state.mode == 0 and MASK in (template[state.cursor], _at(template, state.cursor + 1))
        if opens_blank:
            if new.mode == 1:
                fills.append([])
            else:
                skipped += 1
        state = new
    return PartialDecodeResult(_strip(out, lead), fills, steps, False, skipped)


def _strip(tokens, lead):
    return tokens[1:] if lead else tokens


def count_mask_runs(template):
    runs, prev = 0, False
    for tok in template:
        cur = tok == MASK
        if cur and not prev:
            runs += 1
        prev = cur
    return runs


def full_decode(model, template, new_answer, max_length):
    """Seq2seq baseline: greedy generation of the whole document."""
    vocab = model.vocab
    enc, sources, answer_emb, cond = model.encode_template(template, new_answer)
    state = cc.decoder_initial_state(model.store, enc)
    prev, out = vocab.bos, []
    for _ in range(max_length):
        step = cc.decoder_step(model.store, prev, cond, state, enc, answer_emb, sources, vocab)
        state = step.state
        scores = step.scores.values.copy()
        for banned in (vocab.pad, vocab.bos, vocab.mask):
            scores[banned] = -np.inf
        prev = int(scores.argmax())
        if prev == vocab.eos:
            break
        out.append(sources.token(prev, vocab))
    return out


def edit_document(model, template, new_answer, l_max=None, allow_empty_fill=None):
    """Fill ``template`` conditioned on ``new_answer``; returns the result record."""
    cfg = model.cfg
    predictor = ModelPredictor(model, template, new_answer)
    return partial_decode(
        template, predictor,
        l_max=cfg.l_max if l_max is None else l_max,
        allow_empty_fill=cfg.allow_empty_fill if allow_empty_fill is None else allow_empty_fill,
    )
