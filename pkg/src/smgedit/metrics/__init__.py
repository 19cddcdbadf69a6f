from .bleu import bleu, corpus_bleu, corpus_ibleu, ibleu
from .diff import (
    BOUNDARY,
    bow_f1,
    diff_bleu_ratio,
    diff_sequence,
    gold_template,
    gold_template_mask,
    lcs,
    lcs_tokens,
    template_bleu,
)
from .lm import KnLanguageModel, corpus_perplexity, kn_perplexity, kn_train
from .report import MetricReport, evaluate, parse_report

__all__ = [
    "BOUNDARY", "KnLanguageModel", "MetricReport", "bleu", "bow_f1", "corpus_bleu",
    "corpus_ibleu", "corpus_perplexity", "diff_bleu_ratio", "diff_sequence", "evaluate",
    "gold_template", "gold_template_mask", "ibleu", "kn_perplexity", "kn_train", "lcs",
    "lcs_tokens", "parse_report", "template_bleu",
]
