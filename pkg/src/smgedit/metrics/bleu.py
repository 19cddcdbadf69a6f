"""BLEU-4 and iBLEU on token lists, scaled to 0-100."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

MAX_ORDER = 4


def ngram_counts(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


@dataclass
class BleuStats:
    """Sufficient statistics; add them up for corpus-level BLEU."""

    matches: list = field(default_factory=lambda: [0] * MAX_ORDER)
    totals: list = field(default_factory=lambda: [0] * MAX_ORDER)
    cand_len: int = 0
    ref_len: int = 0

    def __add__(self, other):
        return BleuStats(
            [a + b for a, b in zip(self.matches, other.matches)],
            [a + b for a, b in zip(self.totals, other.totals)],
            self.cand_len + other.cand_len,
            self.ref_len + other.ref_len,
        )


def bleu_stats(candidate, reference, max_order=MAX_ORDER):
    st = BleuStats([0] * max_order, [0] * max_order, len(candidate), len(reference))
    for n in range(1, max_order + 1):
        cand = ngram_counts(candidate, n)
        ref = ngram_counts(reference, n)
        st.matches[n - 1] = sum(min(c, ref[g]) for g, c in cand.items())
        st.totals[n - 1] = max(len(candidate) - n + 1, 0)
    return st


def bleu_from_stats(st, smooth=True):
    """Geometric mean of modified precisions times the brevity penalty.

    With ``smooth``, an order ``n >= 2`` with zero matches uses
    ``(0 + 1) / (total + 1)``.  A zero unigram precision gives 0.
    """
    if st.cand_len == 0 or st.matches[0] == 0:
        return 0.0
    log_p = 0.0
    for n, (m, c) in enumerate(zip(st.matches, st.totals), 1):
        if m == 0:
            if not smooth or n == 1:
                return 0.0
            m, c = 1, c + 1
        log_p += math.log(m / c)
    log_p /= len(st.matches)
    bp = 1.0 if st.cand_len > st.ref_len else math.exp(1.0 - st.ref_len / st.cand_len)
    return 100.0 * bp * math.exp(log_p)


def bleu(candidate, reference, smooth=True, max_order=MAX_ORDER):
    """Sentence BLEU of ``candidate`` against one ``reference``."""
    return bleu_from_stats(bleu_stats(candidate, reference, max_order), smooth)


def corpus_bleu(candidates, references, smooth=True, max_order=MAX_ORDER):
    if len(candidates) != len(references):
        raise ValueError("candidate and reference counts differ")
    st = BleuStats([0] * max_order, [0] * max_order)
    for c, r in zip(candidates, references):
        st = st + bleu_stats(c, r, max_order)
    return bleu_from_stats(st, smooth)


def ibleu(candidate, gold, original, alpha=0.9, smooth=True):
    """``BLEU(candidate, gold) - alpha * BLEU(candidate, original)``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    return bleu(candidate, gold, smooth) - alpha * bleu(candidate, original, smooth)


def corpus_ibleu(candidates, golds, originals, alpha=0.9, smooth=True):
    return corpus_bleu(candidates, golds, smooth) - alpha * corpus_bleu(candidates, originals, smooth)
