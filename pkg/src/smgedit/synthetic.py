"""Templated toy biographies with answers planted verbatim in the text.

Used by the tests and demos: because every answer occurs exactly once, as a
contiguous span, mask coverage and gold edits can be computed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import EditExample, InfoboxRecord, Triple

FIRST = ["john", "mary", "peter", "anna", "george", "lucy", "james", "emma",
         "david", "sarah", "paul", "helen", "mark", "laura", "tom"]
LAST = ["smith", "evans", "brown", "wilson", "taylor", "clark", "walker", "young",
        "hall", "allen", "king", "wright", "scott", "green", "baker"]
NATIONALITY = ["english", "french", "german", "italian", "spanish", "canadian",
               "australian", "irish", "swedish", "dutch"]
OCCUPATION = ["footballer", "painter", "novelist", "physicist", "architect", "singer",
              "jazz pianist", "film director", "chess player", "economist", "poet",
              "tennis player"]
PLACE = ["london", "paris", "berlin", "rome", "madrid", "new york", "buenos aires",
         "dublin", "toronto", "sydney", "hong kong", "oslo"]
YEARS = [str(y) for y in range(1950, 1990)]

TEMPLATES = [
    "{name} -lrb- born {year} in {place} -rrb- is a {nationality} {occupation} .",
    "{name} is a {nationality} {occupation} who was born in {place} in {year} .",
    "{name} -lrb- born {year} -rrb- was a {nationality} {occupation} from {place} .",
    "born in {place} , {name} is a {occupation} of {nationality} origin .",
    "{name} , a {nationality} {occupation} , was born in {year} in {place} .",
]
QUESTIONS = ("name", "nationality", "occupation", "birth place")
_SLOT = {"name": "name", "nationality": "nationality", "occupation": "occupation", "birth place": "place"}


@dataclass
class Biography:
    fields: dict          # question -> answer tokens
    year: str
    template: int

    def render(self, fields=None):
        f = self.fields if fields is None else fields
        text = TEMPLATES[self.template].format(
            name=" ".join(f["name"]), nationality=" ".join(f["nationality"]),
            occupation=" ".join(f["occupation"]), place=" ".join(f["birth place"]),
            year=self.year,
        )
        return text.split()

    def answer_mask(self, question, fields=None):
        """0/1 mask of the planted answer span of ``question``."""
        f = self.fields if fields is None else fields
        marker = "\x00"
        parts = dict(name=" ".join(f["name"]), nationality=" ".join(f["nationality"]),
                     occupation=" ".join(f["occupation"]), place=" ".join(f["birth place"]),
                     year=self.year)
        parts[_SLOT[question]] = " ".join(marker + t for t in f[question])
        toks = TEMPLATES[self.template].format(**parts).split()
        return [1 if t.startswith(marker) else 0 for t in toks]

    def triples(self):
        doc = self.render()
        return [Triple(q, doc, list(self.fields[q])) for q in QUESTIONS]

    def record(self):
        return InfoboxRecord([(q, list(self.fields[q])) for q in QUESTIONS], self.render())


def make_biographies(n=200, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        fields = {
            "name": [FIRST[rng.integers(len(FIRST))], LAST[rng.integers(len(LAST))]],
            "nationality": [NATIONALITY[rng.integers(len(NATIONALITY))]],
            "occupation": OCCUPATION[rng.integers(len(OCCUPATION))].split(),
            "birth place": PLACE[rng.integers(len(PLACE))].split(),
        }
        out.append(Biography(fields, YEARS[rng.integers(len(YEARS))], int(rng.integers(len(TEMPLATES)))))
    return out


def make_triples(bios):
    return [t for b in bios for t in b.triples()]


def swap_examples(bios, n=100, seed=0):
    """Edit examples with gold edits, swapping answers between biographies.

    Returns ``(examples, masks)`` where ``masks[k]`` marks the original
    answer span in the document of ``examples[k]``.
    """
    rng = np.random.default_rng(seed)
    examples, masks = [], []
    while len(examples) < n:
        i, j = rng.integers(len(bios), size=2)
        q = QUESTIONS[rng.integers(len(QUESTIONS))]
        a, b = bios[i], bios[j]
        if a.fields[q] == b.fields[q]:
            continue
        new_fields = dict(a.fields)
        new_fields[q] = list(b.fields[q])
        examples.append(EditExample(q, a.render(), list(a.fields[q]), list(b.fields[q]), a.render(new_fields)))
        masks.append(a.answer_mask(q))
    return examples, masks


def write_records(records, fh):
    """Serialize records in the block format read by :func:`corpus.iter_records`."""
    for rec in records:
        for name, content in rec.pairs:
            fh.write(f"FIELD\t{name}\t{' '.join(content)}\n")
        fh.write(f"TEXT\t{' '.join(rec.text)}\n\n")
