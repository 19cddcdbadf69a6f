"""
Filling blanks one token at a time
==================================

The decoder walks along a template, copying plain tokens and writing into
``[M]`` blanks until the end-of-answer signal fires.  A scripted predictor
stands in for the trained network so every step can be followed by hand.
"""

from smgedit.partial_generator import DecodeState, ScriptedPredictor, partial_decode, transition

template = "the [M] sat on the [M] [M] .".split()

# %% the raw state machine, driven step by step
script = [("cat", 1), ("old", 0), ("mat", 1)]
state, pending = DecodeState(x_in=template[0]), list(script)
while not (state.mode == 0 and state.cursor >= len(template)):
    token, eoa = pending[0] if state.mode == 1 else ("-", 0)
    new, emitted = transition(state, template, token, eoa, l_max=4)
    if state.mode == 1:
        pending.pop(0)
    print(f"mode={state.mode} cursor={state.cursor} written={state.written}  ->  emit {emitted!r}")
    state = new

# %% the same run through partial_decode; the second blank takes two tokens
result = partial_decode(template, ScriptedPredictor(script, read_steps=False), l_max=4)
print(" ".join(result.tokens))
print("fills:", result.fills)

# %% without an end-of-answer signal a fill stops at l_max
result = partial_decode("a [M] b".split(), ScriptedPredictor([], default=("w", 0)), l_max=3)
print(" ".join(result.tokens))

# %% a template may start with a blank
result = partial_decode("[M] is a poet .".split(), ScriptedPredictor([("ann", 1)], read_steps=False))
print(" ".join(result.tokens))
