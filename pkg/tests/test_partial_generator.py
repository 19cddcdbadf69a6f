import numpy as np
import pytest

from smgedit import partial_generator as pg
from smgedit.corpus import BOS, MASK
from smgedit.partial_generator import DecodeState, ScriptedPredictor, partial_decode, transition
from smgedit.selector import make_template

M = MASK


# -- transition ---------------------------------------------------------------------------


def test_read_into_blank():
    state, out = transition(DecodeState(x_in="a"), ["a", M, "b"], "x", 0)
    assert out == "a" and state.mode == 1 and state.cursor == 2 and state.x_in == "x"


def test_read_two_plain_tokens():
    state, out = transition(DecodeState(x_in="a"), ["a", "b"], "x", 0)
    assert out == "a" and state.mode == 0 and state.cursor == 1 and state.x_in == "b"


def test_write_hits_length_limit():
    state, out = transition(DecodeState(mode=1, cursor=2, written=2), ["a", M, "b"], "w", 0, l_max=3)
    assert out == "w" and state.mode == 0 and state.written == 0 and state.x_in == "b"


def test_write_continues_without_eoa():
    state, out = transition(DecodeState(mode=1, cursor=2, written=0), ["a", M, "b"], "w", 0, l_max=3)
    assert out == "w" and state.mode == 1 and state.written == 1 and state.x_in == "w"


def test_write_stops_on_eoa():
    state, _ = transition(DecodeState(mode=1, cursor=2, written=0), ["a", M, "b"], "w", 1)
    assert state.mode == 0 and state.written == 0


def test_eoa_at_boundary_skips_blank_only_when_allowed():
    s, _ = transition(DecodeState(x_in="a"), ["a", M, M, "b"], "x", 1, allow_empty_fill=True)
    assert s.mode == 0 and s.cursor == 3
    s, _ = transition(DecodeState(x_in="a"), ["a", M, M, "b"], "x", 1)
    assert s.mode == 1 and s.cursor == 3


def test_past_end_is_terminal():
    st = DecodeState(cursor=2)
    assert transition(st, ["a", "b"], "x", 0) == (st, None)


# -- partial_decode -----------------------------------------------------------------------


def test_no_masks_is_pure_reading():
    r = partial_decode(["a", "b", "c"], ScriptedPredictor([]))
    assert r.tokens == ["a", "b", "c"] and r.fills == [] and r.steps == 3


def test_the_cat_sat():
    r = partial_decode(["the", M, "sat"], ScriptedPredictor([("cat", 1)], read_steps=False))
    assert r.tokens == ["the", "cat", "sat"] and r.fills == [["cat"]]


def test_fill_forced_to_l_max():
    r = partial_decode(["a", M, "b"], ScriptedPredictor([], default=("w", 0)), l_max=3)
    assert r.tokens == ["a", "w", "w", "w", "b"]


def test_leading_mask():
    r = partial_decode([M, "sat"], ScriptedPredictor([("cat", 1)], read_steps=False))
    assert r.tokens == ["cat", "sat"] and BOS not in r.tokens


def test_trailing_mask():
    r = partial_decode(["the", M], ScriptedPredictor([("cat", 0), ("dog", 1)], read_steps=False))
    assert r.tokens == ["the", "cat", "dog"]


def test_step_cap_flags_truncation():
    r = partial_decode(["a", M, "b"], ScriptedPredictor([], default=("w", 0)), l_max=5, max_total_steps=3)
    assert r.truncated and r.steps == 3


def test_bad_arguments():
    with pytest.raises(ValueError):
        partial_decode([], ScriptedPredictor([]))
    with pytest.raises(ValueError):
        partial_decode(["a"], ScriptedPredictor([]), l_max=0)


def _context(template):
    return [t for t in template if t != M]


@pytest.mark.parametrize("allow_empty", [False, True])
def test_fuzz_invariants(allow_empty):
    rng = np.random.default_rng(17 + allow_empty)
    for _ in range(1000):
        n = int(rng.integers(1, 15))
        template = [M if rng.random() < 0.35 else f"t{i}" for i in range(n)]
        l_max = int(rng.integers(1, 5))
        script = [(f"g{k}", int(rng.random() < 0.4)) for k in range(60)]
        r = partial_decode(template, ScriptedPredictor(script), l_max=l_max, allow_empty_fill=allow_empty)
        runs = pg.count_mask_runs(template)
        assert not r.truncated
        assert r.steps <= len(template) + (1 if template[0] == M else 0) + l_max * runs
        assert [t for t in r.tokens if not t.startswith("g")] == _context(template)
        assert len(r.fills) == runs - r.skipped
        assert all(1 <= len(f) <= l_max for f in r.fills)
        assert sum(len(f) for f in r.fills) + len(_context(template)) == len(r.tokens)
        if not allow_empty:
            assert r.skipped == 0


def test_decode_state_invariants_along_trace():
    rng = np.random.default_rng(3)
    for _ in range(200):
        template = [M if rng.random() < 0.4 else "x" for _ in range(int(rng.integers(1, 10)))]
        if template[0] == M:
            template = [BOS] + template
        state = DecodeState(x_in=template[0])
        for _ in range(100):
            state, _ = transition(state, template, "y", int(rng.random() < 0.3), l_max=3)
            assert state.mode in (0, 1) and 0 <= state.written <= 3
            assert state.cursor <= len(template)
            assert state.mode == 1 or state.written == 0


# -- with a model ---------------------------------------------------------------------------


def test_model_edit_preserves_context(tiny_model):
    template = ["ann", M, "is", "a", M, "."]
    r = pg.edit_document(tiny_model, template, ["painter"], l_max=3)
    assert len(r.fills) == 2 and all(1 <= len(f) <= 3 for f in r.fills)
    assert r.tokens == ["ann", *r.fills[0], "is", "a", *r.fills[1], "."]


def test_full_decode_bounded_and_deterministic(tiny_model):
    template = ["ann", M, "is", "a", "poet", "."]
    a = pg.full_decode(tiny_model, template, ["bob"], max_length=7)
    b = pg.full_decode(tiny_model, template, ["bob"], max_length=7)
    assert a == b and len(a) <= 7


@pytest.mark.slow
def test_full_decode_reproduces_training_documents(toy_seq2seq, toy_bios):
    hits = total = 0
    for bio in toy_bios[:50]:
        for t in bio.triples()[:2]:
            template = make_template(t.document, toy_seq2seq.select_mask(t.document, t.question))
            out = pg.full_decode(toy_seq2seq, template, t.answer, max_length=2 * len(t.document) + 10)
            hits += out == t.document
            total += 1
    assert hits / total >= 0.8
