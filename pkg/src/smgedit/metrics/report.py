"""Aggregate evaluation over aligned prediction / gold / original documents."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bleu import corpus_bleu
from .diff import bow_f1, diff_bleu_ratio, gold_template, template_bleu
from .lm import corpus_perplexity

NA = "n/a"


@dataclass
class MetricReport:
    n_examples: int
    bleu: float
    ibleu: float
    diff_bleu_ratio: float | None
    diff_bleu_na: int
    perplexity: float | None = None
    answer_f1: float | None = None
    template_bleu: float | None = None
    alpha: float = 0.9

    def lines(self):
        def fmt(v):
            return NA if v is None else f"{v:.6f}"

        return [
            f"n_examples\t{self.n_examples}",
            f"bleu\t{fmt(self.bleu)}",
            f"ibleu\t{fmt(self.ibleu)}",
            f"alpha\t{fmt(self.alpha)}",
            f"diff_bleu_ratio\t{fmt(self.diff_bleu_ratio)}",
            f"diff_bleu_not_applicable\t{self.diff_bleu_na}",
            f"perplexity\t{fmt(self.perplexity)}",
            f"answer_f1\t{fmt(self.answer_f1)}",
            f"template_bleu\t{fmt(self.template_bleu)}",
        ]

    def text(self):
        return "\n".join(self.lines()) + "\n"


def parse_report(text):
    out = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, value = line.split("\t")
        out[key] = None if value == NA else float(value)
    return out


def evaluate(predictions, golds, originals, alpha=0.9, lm=None,
             answers_pred=None, answers_gold=None, templates_pred=None):
    """Corpus-level report.

    BLEU and iBLEU pool n-gram statistics over the corpus; diff-BLEU ratio,
    answer F1 and template BLEU are per-example means (undefined ratios are
    counted and left out).
    """
    n = len(predictions)
    if not (n == len(golds) == len(originals)):
        raise ValueError("prediction, gold and original counts differ")
    b = corpus_bleu(predictions, golds)
    ib = b - alpha * corpus_bleu(predictions, originals)
    ratios = [diff_bleu_ratio(p, g, o) for p, g, o in zip(predictions, golds, originals)]
    defined = [r for r in ratios if r is not None]
    report = MetricReport(
        n_examples=n, bleu=b, ibleu=ib,
        diff_bleu_ratio=math.fsum(defined) / len(defined) if defined else None,
        diff_bleu_na=len(ratios) - len(defined), alpha=alpha,
    )
    if lm is not None:
        report.perplexity = corpus_perplexity(lm, predictions)
    if answers_pred is not None:
        if len(answers_pred) != len(answers_gold):
            raise ValueError("answer file lengths differ")
        report.answer_f1 = math.fsum(bow_f1(a, g) for a, g in zip(answers_pred, answers_gold)) / max(len(answers_pred), 1)
    if templates_pred is not None:
        if len(templates_pred) != n:
            raise ValueError("template count differs from originals")
        scores = [template_bleu(t, gold_template(o, g)) for t, o, g in zip(templates_pred, originals, golds)]
        report.template_bleu = math.fsum(scores) / max(n, 1)
    return report
