"""
Scoring an edit
===============

An edit is judged against two documents: the gold edit it should match and
the original it should move away from.  This walk-through scores a few
candidate edits of one sentence.
"""

from smgedit.metrics import (
    bleu, corpus_perplexity, diff_bleu_ratio, diff_sequence, gold_template, ibleu, kn_train,
)

original = "mary evans -lrb- born 1961 in paris -rrb- is a french painter .".split()
gold = "mary evans -lrb- born 1961 in dublin -rrb- is a french painter .".split()

# %% the part of the gold edit that differs from the original
print("diff   :", diff_sequence(gold, original))
print("shared :", " ".join(gold_template(original, gold)))

# %% three candidates: the right edit, no edit at all, and an edit in the wrong place
candidates = {
    "correct": gold,
    "unchanged": original,
    "wrong slot": "mary evans -lrb- born 1961 in paris -rrb- is a irish painter .".split(),
}
for name, cand in candidates.items():
    ratio = diff_bleu_ratio(cand, gold, original)
    print(f"{name:10s} BLEU {bleu(cand, gold):6.2f}  iBLEU {ibleu(cand, gold, original):6.2f}  "
          f"diff-BLEU ratio {ratio:.3f}")

# BLEU still gives the untouched document a high score; the ratio gives it zero.

# %% fluency: a trigram Kneser-Ney model prefers ordered text to shuffled text
sentences = [
    "john smith is a painter .", "mary evans is a poet .", "john evans is a french painter .",
    "mary smith is an italian poet .", "a painter is born in paris .",
]
lm = kn_train([s.split() for s in sentences], order=3)
print("ordered  perplexity", round(corpus_perplexity(lm, [["mary", "smith", "is", "a", "painter", "."]]), 2))
print("shuffled perplexity", round(corpus_perplexity(lm, [["painter", "a", ".", "is", "smith", "mary"]]), 2))
