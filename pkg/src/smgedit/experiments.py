"""Measurements over trained models shared by the acceptance suite and demos."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import MASK
from .metrics import bleu, bow_f1, corpus_bleu, diff_bleu_ratio, gold_template_mask
from .partial_generator import edit_document, full_decode
from .selector import make_template


def mask_runs(template):
    """``(start, stop)`` index pairs of the maximal ``[M]`` runs."""
    runs, start = [], None
    for i, tok in enumerate(list(template) + [None]):
        if tok == MASK and start is None:
            start = i
        elif tok != MASK and start is not None:
            runs.append((start, i))
            start = None
    return runs


def blank_accuracy(model, document, mask, answer):
    """Correct and total blank tokens when re-filling ``document`` from its own answer.

    Fill ``k`` of the partial decode is compared position by position with
    the original tokens of blank run ``k``; missing tokens count as wrong.
    """
    template = make_template(document, mask)
    result = edit_document(model, template, answer, allow_empty_fill=False)
    correct = total = 0
    for k, (a, b) in enumerate(mask_runs(template)):
        fill = result.fills[k] if k < len(result.fills) else []
        gold = document[a:b]
        correct += sum(1 for i, tok in enumerate(gold) if i < len(fill) and fill[i] == tok)
        total += len(gold)
    return correct, total


@dataclass
class OverfitReport:
    blank_accuracy: float
    answer_f1: float
    coverage: float
    exact_masks: float
    mean_selected: float


def overfit_report(model, bios):
    """Reconstruction quality on the synthetic biographies a model was trained on."""
    correct = total = 0
    f1, covered, exact, selected = [], [], [], []
    for bio in bios:
        for triple in bio.triples():
            gold = np.array(bio.answer_mask(triple.question))
            mask = model.select_mask(triple.document, triple.question)
            covered.append(bool(np.all(mask[gold == 1] == 1)))
            exact.append(bool(np.array_equal(mask, gold)))
            selected.append(int(mask.sum()))
            f1.append(bow_f1(model.generate_answer(triple.document, mask=mask), triple.answer))
            c, t = blank_accuracy(model, triple.document, mask, triple.answer)
            correct, total = correct + c, total + t
    return OverfitReport(
        blank_accuracy=correct / total if total else 0.0,
        answer_f1=float(np.mean(f1)),
        coverage=float(np.mean(covered)),
        exact_masks=float(np.mean(exact)),
        mean_selected=float(np.mean(selected)),
    )


@dataclass
class EditReport:
    bleu: float
    diff_bleu_ratio: float
    undefined: int
    outputs: list


def edit_report(model, examples, template_source="gold"):
    """Edit each example and score it against its gold document.

    ``template_source`` is ``"gold"`` (blank what the gold edit changes),
    ``"predicted"`` (the selector's argmax mask) or ``"full"`` (the decoder
    regenerates the whole document from the predicted template, as the
    seq2seq baseline does).
    """
    outputs = []
    for ex in examples:
        doc = ex.document
        if template_source == "gold":
            out = edit_document(model, make_template(doc, gold_template_mask(doc, ex.gold_document)),
                                ex.changed_answer).tokens
        elif template_source == "predicted":
            out = edit_document(model, make_template(doc, model.select_mask(doc, ex.question)),
                                ex.changed_answer).tokens
        elif template_source == "full":
            template = make_template(doc, model.select_mask(doc, ex.question))
            out = full_decode(model, template, ex.changed_answer, max_length=2 * len(doc) + 10)
        else:
            raise ValueError(f"unknown template source {template_source!r}")
        outputs.append(out)
    golds = [ex.gold_document for ex in examples]
    ratios = [diff_bleu_ratio(o, ex.gold_document, ex.document) for o, ex in zip(outputs, examples)]
    defined = [r for r in ratios if r is not None]
    return EditReport(
        bleu=corpus_bleu(outputs, golds),
        diff_bleu_ratio=float(np.mean(defined)) if defined else float("nan"),
        undefined=len(ratios) - len(defined),
        outputs=outputs,
    )


def sentence_bleus(outputs, examples):
    return [bleu(o, ex.gold_document) for o, ex in zip(outputs, examples)]
