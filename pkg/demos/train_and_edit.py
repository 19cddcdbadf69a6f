"""
Training a toy editor
=====================

Two hundred templated biographies, four question types.  The model learns
which tokens answer each question, blanks them, and regenerates the blank
from a new answer.  Training takes about a minute on one core; pass a step
count as the first argument to shorten it.
"""

import sys

from smgedit import synthetic as syn
from smgedit.config import TOY_CONFIG
from smgedit.corpus import build_vocab
from smgedit.experiments import edit_report, overfit_report
from smgedit.model import SMGModel, train
from smgedit.partial_generator import edit_document
from smgedit.selector import make_template

steps = int(sys.argv[1]) if len(sys.argv) > 1 else TOY_CONFIG.steps
bios = syn.make_biographies(200, seed=0)
triples = syn.make_triples(bios)
cfg = TOY_CONFIG.replace(questions=list(syn.QUESTIONS), steps=steps)
model = SMGModel(cfg, build_vocab(triples), cfg.questions)
print(len(triples), "triples, vocabulary", len(model.vocab))

# %% train, printing the loss every 500 steps
def progress(row):
    if row[0] % 500 == 0:
        print("step %d  L_A %.3f  L_recon %.3f  L_eoa %.3f" % row[:4])


train(model, triples, on_step=progress)

# %% what the selector picked
bio = bios[3]
doc = bio.render()
for q in syn.QUESTIONS:
    mask = model.select_mask(doc, q)
    print(f"{q:12s}", " ".join(make_template(doc, mask)))

# %% editing: swap the nationality
new = ["swedish"]
template = make_template(doc, model.select_mask(doc, "nationality"))
print("before:", " ".join(doc))
print("after :", " ".join(edit_document(model, template, new).tokens))

# %% scores on the training set and on 100 answer swaps
print(overfit_report(model, bios))
examples, _ = syn.swap_examples(bios, n=100, seed=7)
for source in ("gold", "predicted"):
    r = edit_report(model, examples, source)
    print(f"{source:9s} BLEU {r.bleu:6.2f}  diff-BLEU ratio {r.diff_bleu_ratio:.3f}")
