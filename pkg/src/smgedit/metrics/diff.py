"""LCS alignment, difference sequences and the scores built on them."""

from __future__ import annotations

from collections import Counter

from ..corpus import MASK
from .bleu import bleu

BOUNDARY = "⟂"


def lcs(a, b):
    """Longest common subsequence as a list of ``(i, j)`` index pairs.

    Among optimal alignments the one using the earliest positions of ``b``
    is returned.
    """
    n, m = len(a), len(b)
    # suffix table: L[i][j] = LCS length of a[i:], b[j:]
    L = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = L[i], L[i + 1]
        ai = a[i]
        for j in range(m - 1, -1, -1):
            row[j] = nxt[j + 1] + 1 if ai == b[j] else max(nxt[j], row[j + 1])
    pairs, i, j = [], 0, 0
    while i < n and j < m:
        if a[i] == b[j]:
            pairs.append((i, j))
            i, j = i + 1, j + 1
        elif L[i + 1][j] >= L[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def lcs_tokens(a, b):
    return [a[i] for i, _ in lcs(a, b)]


def diff_sequence(gold, original, boundary=BOUNDARY):
    """Tokens of ``gold`` outside its LCS with ``original``.

    Separate runs of unmatched tokens are joined by ``boundary`` so that no
    n-gram spans removed material.
    """
    matched = {j for _, j in lcs(original, gold)}
    out, prev = [], None
    for j, tok in enumerate(gold):
        if j in matched:
            continue
        if out and prev != j - 1:
            out.append(boundary)
        out.append(tok)
        prev = j
    return out


def diff_bleu_ratio(candidate, gold, original, smooth=True):
    """``BLEU(candidate, gold - original) / BLEU(gold, gold - original)``.

    Returns ``None`` when the denominator is zero (ratio undefined).
    """
    diff = diff_sequence(gold, original)
    denom = bleu(gold, diff, smooth)
    if denom == 0.0:
        return None
    return bleu(candidate, diff, smooth) / denom


def gold_template(original, gold):
    """The common sequence of the original and the gold edit."""
    return lcs_tokens(original, gold)


def gold_template_mask(original, gold):
    """1 at positions of ``original`` outside its LCS with ``gold``."""
    kept = {i for i, _ in lcs(original, gold)}
    return [0 if i in kept else 1 for i in range(len(original))]


def template_bleu(predicted_template, gold_tmpl, smooth=True):
    """BLEU of the predicted template (blanks removed) against the gold template."""
    cand = [tok for tok in predicted_template if tok != MASK]
    return bleu(cand, gold_tmpl, smooth)


def bow_f1(generated, gold):
    """Bag-of-words F1 with multiset counts."""
    if not generated and not gold:
        return 1.0
    if not generated or not gold:
        return 0.0
    common = sum((Counter(generated) & Counter(gold)).values())
    if common == 0:
        return 0.0
    p = common / len(generated)
    r = common / len(gold)
    return 2 * p * r / (p + r)
