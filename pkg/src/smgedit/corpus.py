"""WikiBio-style records to question/document/answer triples.

Record file format: one record per block, blocks separated by blank lines::

    FIELD<TAB>name<TAB>Frank Fenner
    FIELD<TAB>occupation<TAB>Virology
    TEXT<TAB>frank john fenner -lrb- 21 december 1914 ...

Several ``TEXT`` lines are joined in order.  Triple files are JSON lines with
string values for ``question``, ``document`` and ``answer`` (space-joined
tokens); evaluation files add ``changed_answer`` and ``gold_document``.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

# Fields kept as questions, with their occurrence counts in the WikiBio
# training set.
FIELD_COUNTS = {
    "birth date": 679_400,
    "name": 675_800,
    "birth place": 659_300,
    "death date": 420_700,
    "death place": 377_700,
    "occupation": 231_900,
    "position": 199_400,
    "nationality": 187_100,
    "spouse": 184_000,
    "fullname": 180_200,
    "alma mater": 115_500,
    "children": 114_900,
    "residence": 112_100,
    "religion": 99_300,
    "predecessor": 91_000,
    "successor": 90_100,
    "known for": 63_400,
    "origin": 46_600,
    "country": 43_500,
    "education": 43_100,
    "instrument": 36_700,
    "college": 35_900,
    "citizenship": 29_100,
    "ethnicity": 28_700,
    "discipline": 11_200,
    "work institutions": 5_300,
}
DEFAULT_WHITELIST = tuple(FIELD_COUNTS)
DEFAULT_MIN_FIELD_COUNT = 5000

PAD, UNK, MASK, EOS, BOS = "<pad>", "<unk>", "[M]", "<eos>", "<bos>"
RESERVED = (PAD, UNK, MASK, EOS, BOS)


class RecordFormatError(ValueError):
    pass


def tokenize(text):
    """Whitespace split of pre-tokenized text, lowercased; ``[M]`` is kept as is."""
    return [MASK if tok == MASK else tok.lower() for tok in text.split()]


def normalize_field(name):
    return " ".join(name.replace("_", " ").lower().split())


@dataclass
class InfoboxRecord:
    pairs: list[tuple[str, list[str]]]
    text: list[str]


@dataclass
class Triple:
    question: str
    document: list[str]
    answer: list[str]

    def to_json(self):
        return {
            "question": self.question,
            "document": " ".join(self.document),
            "answer": " ".join(self.answer),
        }


@dataclass
class EditExample:
    question: str
    document: list[str]
    answer: list[str]
    changed_answer: list[str]
    gold_document: list[str] | None = None

    def to_json(self):
        return {
            "question": self.question,
            "document": " ".join(self.document),
            "answer": " ".join(self.answer),
            "changed_answer": " ".join(self.changed_answer),
            "gold_document": None if self.gold_document is None else " ".join(self.gold_document),
        }


def parse_record(raw, stats=None):
    """Parse one record block; returns ``None`` for records that must be skipped.

    Malformed lines are dropped with a logged diagnostic.  A record without
    any field pair or without text is skipped.  ``stats``, when given, is a
    ``Counter`` that accumulates ``lines``, ``malformed`` and ``skipped``.
    """
    stats = Counter() if stats is None else stats
    pairs, text = [], []
    for lineno, line in enumerate(raw.splitlines(), 1):
        if not line.strip():
            continue
        stats["lines"] += 1
        parts = line.rstrip("\n").split("\t")
        kind = parts[0]
        if kind == "FIELD" and len(parts) == 3 and parts[1].strip():
            content = tokenize(parts[2])
            if content:
                pairs.append((normalize_field(parts[1]), content))
        elif kind == "TEXT" and len(parts) == 2:
            text.extend(tokenize(parts[1]))
        else:
            stats["malformed"] += 1
            log.warning("malformed record line %d skipped: %r", lineno, line[:80])
    if not pairs or not text:
        stats["skipped"] += 1
        log.info("record skipped: %s", "no field pairs" if not pairs else "empty text")
        return None
    return InfoboxRecord(pairs, text)


def iter_records(path, stats=None):
    """Stream records from a record file (see :func:`parse_record` for ``stats``)."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise RecordFormatError(f"cannot read record file {path}: {exc}") from exc
    with fh:
        block = []
        for line in fh:
            if line.strip():
                block.append(line)
                continue
            if block:
                rec = parse_record("".join(block), stats)
                if rec is not None:
                    yield rec
                block = []
        if block:
            rec = parse_record("".join(block), stats)
            if rec is not None:
                yield rec


def field_frequencies(records):
    counts = Counter()
    for rec in records:
        counts.update({name for name, _ in rec.pairs})
    return counts


def frequent_fields(records, min_field_count=DEFAULT_MIN_FIELD_COUNT, whitelist=DEFAULT_WHITELIST):
    """Whitelisted fields appearing in at least ``min_field_count`` records."""
    if min_field_count < 0:
        raise ValueError("min_field_count must be non-negative")
    allowed = {normalize_field(f) for f in whitelist}
    freq = field_frequencies(records)
    return {f for f in allowed if freq[f] >= min_field_count}


def record_triples(rec, fields):
    return [Triple(name, list(rec.text), list(content)) for name, content in rec.pairs if name in fields]


def build_triples(records, min_field_count=DEFAULT_MIN_FIELD_COUNT, whitelist=DEFAULT_WHITELIST):
    """One triple per whitelisted field pair whose field is frequent enough."""
    records = list(records)
    keep = frequent_fields(records, min_field_count, whitelist)
    return [t for rec in records for t in record_triples(rec, keep)]


def sample_eval_candidates(triples, target_size=1000, rng=None, max_retries=None):
    """Sample an equal number of edit candidates per question.

    Each question contributes ``ceil(target_size / #questions)`` examples, or
    all of its triples when it has fewer.  The changed answer is drawn
    uniformly from the answers seen under the same question, excluding ones
    equal to the original answer; examples with no such alternative are
    replaced by the next candidate of the same question, up to
    ``max_retries`` replacements (unbounded by default).
    """
    if rng is None or isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    by_question: dict[str, list[Triple]] = {}
    for t in triples:
        by_question.setdefault(t.question, []).append(t)
    if not by_question:
        return []
    quota = math.ceil(target_size / len(by_question))
    out = []
    for question in sorted(by_question):
        pool = by_question[question]
        answers = [t.answer for t in pool]
        taken, retries = 0, 0
        for i in rng.permutation(len(pool)):
            if taken == quota:
                break
            t = pool[i]
            alternatives = [a for a in answers if a != t.answer]
            if not alternatives:
                log.warning("no alternative answer for %r under %r", " ".join(t.answer), question)
                retries += 1
                if max_retries is not None and retries > max_retries:
                    break
                continue
            new = alternatives[rng.integers(len(alternatives))]
            out.append(EditExample(question, list(t.document), list(t.answer), list(new)))
            taken += 1
    return out


class Vocabulary:
    """Token/index mapping with fixed reserved indices 0..4.

    ``<pad>``=0, ``<unk>``=1, ``[M]``=2, ``<eos>``=3, ``<bos>``=4.
    """

    def __init__(self, tokens=()):
        self.itos = list(RESERVED)
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        for tok in tokens:
            if tok not in self.stoi:
                self.stoi[tok] = len(self.itos)
                self.itos.append(tok)

    pad, unk, mask, eos, bos = range(5)

    def __len__(self):
        return len(self.itos)

    def __contains__(self, tok):
        return tok in self.stoi

    def encode(self, tokens):
        return [self.stoi.get(t, self.unk) for t in tokens]

    def decode(self, ids):
        return [self.itos[i] for i in ids]


def build_vocab(triples, min_count=1):
    if not triples:
        raise ValueError("build_vocab: empty corpus")
    counts = Counter()
    for t in triples:
        counts.update(t.document)
        counts.update(t.answer)
    kept = sorted((tok for tok, c in counts.items() if c >= min_count and tok not in RESERVED),
                  key=lambda tok: (-counts[tok], tok))
    return Vocabulary(kept)


def _tokens(value):
    return value.split() if isinstance(value, str) else list(value)


def read_triples(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out.append(Triple(obj["question"], _tokens(obj["document"]), _tokens(obj["answer"])))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise RecordFormatError(f"{path}:{lineno}: bad triple line ({exc})") from exc
    return out


def read_edit_examples(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                gold = obj.get("gold_document")
                out.append(EditExample(
                    obj["question"], _tokens(obj["document"]), _tokens(obj["answer"]),
                    _tokens(obj["changed_answer"]), None if gold is None else _tokens(gold),
                ))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise RecordFormatError(f"{path}:{lineno}: bad example line ({exc})") from exc
    return out


def dump_jsonl(items, fh):
    for item in items:
        fh.write(json.dumps(item.to_json(), ensure_ascii=False) + "\n")
