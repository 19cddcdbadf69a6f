"""Interpolated Kneser-Ney n-gram language model for fluency scoring."""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict

BOS, EOS, UNK = "<s>", "</s>", "<unk>"


def pad_sentence(tokens, order):
    return [BOS] * (order - 1) + list(tokens) + [EOS]


class KnLanguageModel:
    """Interpolated Kneser-Ney with one absolute discount for all orders.

    The highest order uses raw counts, lower orders use continuation counts
    (number of distinct left extensions), and the recursion bottoms out in a
    uniform distribution over the vocabulary, so unseen tokens keep positive
    probability through ``<unk>``.
    """

    def __init__(self, order, ngram_counts, discount=None):
        if order < 2:
            raise ValueError("order must be at least 2")
        self.order = order
        self.top = Counter(ngram_counts)
        self.vocab = sorted({w for g in self.top for w in g if w != BOS} | {UNK, EOS})
        self._vocab_set = set(self.vocab)
        # counts[k] maps k-gram -> count used at order k
        self.counts = {order: self.top}
        for k in range(order - 1, 0, -1):
            cont = Counter()
            for g in self.counts[k + 1]:
                cont[g[1:]] += 1
            self.counts[k] = cont
        self.context_total = {}
        self.context_types = {}
        for k, table in self.counts.items():
            tot, typ = defaultdict(int), defaultdict(int)
            for g, c in table.items():
                tot[g[:-1]] += c
                typ[g[:-1]] += 1
            self.context_total[k] = dict(tot)
            self.context_types[k] = dict(typ)
        self.discount = self.estimate_discount() if discount is None else discount

    def estimate_discount(self):
        """``n1 / (n1 + 2 n2)`` from raw bigram count-of-counts (0.5 if ``n1 = 0``)."""
        bigrams = Counter()
        for g, c in self.top.items():
            bigrams[g[-2:]] += c
        n1 = sum(1 for c in bigrams.values() if c == 1)
        n2 = sum(1 for c in bigrams.values() if c == 2)
        if n1 == 0:
            return 0.5
        return n1 / (n1 + 2 * n2)

    @property
    def vocab_size(self):
        return len(self.vocab)

    def map_token(self, w):
        return w if w in self._vocab_set or w == BOS else UNK

    def prob(self, word, context=()):
        word = self.map_token(word)
        context = tuple(self.map_token(w) for w in context)[-(self.order - 1):]
        if len(context) < self.order - 1:
            context = (BOS,) * (self.order - 1 - len(context)) + context
        return self._prob(word, context, self.order)

    def _prob(self, word, context, k):
        if k == 0:
            return 1.0 / len(self.vocab)
        h = context[len(context) - (k - 1):] if k > 1 else ()
        lower = self._prob(word, context, k - 1)
        total = self.context_total[k].get(h, 0)
        if total == 0:
            return lower
        c = self.counts[k].get(h + (word,), 0)
        D = self.discount
        types = self.context_types[k][h]
        return max(c - D, 0.0) / total + D * types / total * lower

    def distribution(self, context=()):
        return {w: self.prob(w, context) for w in self.vocab}

    def sentence_logprob(self, tokens):
        padded = pad_sentence([self.map_token(w) for w in tokens], self.order)
        lp = 0.0
        for i in range(self.order - 1, len(padded)):
            lp += math.log(self.prob(padded[i], padded[i - self.order + 1:i]))
        return lp, len(padded) - (self.order - 1)

    def to_json(self):
        return {
            "order": self.order,
            "discount": self.discount,
            "ngrams": [[list(g), c] for g, c in sorted(self.top.items())],
        }

    @classmethod
    def from_json(cls, obj):
        counts = {tuple(g): c for g, c in obj["ngrams"]}
        return cls(obj["order"], counts, obj["discount"])

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, ensure_ascii=False)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def kn_train(corpus, order=3):
    """Train on a list of token lists (sentences)."""
    corpus = [list(s) for s in corpus]
    n_tokens = sum(len(s) for s in corpus)
    if n_tokens < order:
        raise ValueError(f"corpus has {n_tokens} tokens, fewer than the order {order}")
    counts = Counter()
    for s in corpus:
        padded = pad_sentence(s, order)
        for i in range(len(padded) - order + 1):
            counts[tuple(padded[i:i + order])] += 1
    return KnLanguageModel(order, counts)


def kn_perplexity(model, tokens):
    """Perplexity of one sentence (end marker included)."""
    return corpus_perplexity(model, [tokens])


def corpus_perplexity(model, sentences):
    lp, n = 0.0, 0
    for s in sentences:
        a, b = model.sentence_logprob(s)
        lp += a
        n += b
    return math.exp(-lp / n)
