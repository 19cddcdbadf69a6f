"""``smgedit`` command line: data construction, training, editing and evaluation.

Exit status: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Set ``SMGEDIT_LOG_LEVEL`` (e.g. ``DEBUG``) to change log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from collections import Counter
from contextlib import contextmanager

import numpy as np

from . import checkpoint
from .config import load_config
from .corpus import (
    DEFAULT_MIN_FIELD_COUNT, DEFAULT_WHITELIST, RecordFormatError, build_vocab, dump_jsonl,
    frequent_fields, iter_records, read_triples, record_triples, sample_eval_candidates, tokenize,
)
from .metrics import KnLanguageModel, corpus_perplexity, evaluate, kn_train
from .model import SMGModel, UnknownQuestionError, train
from .partial_generator import edit_document
from .selector import make_template, template_mask
from .tensor import NumericalError

log = logging.getLogger("smgedit")

OK, USAGE, DATA, NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


@contextmanager
def atomic_text(path):
    """Open a temporary sibling of ``path`` for writing; rename into place on success."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            yield fh
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def read_lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return [tokenize(line) for line in fh.read().splitlines()]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def record_files(path):
    if os.path.isdir(path):
        names = sorted(n for n in os.listdir(path) if not n.startswith("."))
        return [os.path.join(path, n) for n in names if os.path.isfile(os.path.join(path, n))]
    if os.path.isfile(path):
        return [path]
    raise DataError(f"records path does not exist: {path}")


# -- build-data / sample-test ------------------------------------------------------


def cmd_build_data(args):
    whitelist = DEFAULT_WHITELIST
    if args.whitelist:
        with open(args.whitelist, encoding="utf-8") as fh:
            whitelist = [line.strip() for line in fh if line.strip() and not line.startswith("#")]
    files = record_files(args.records)
    stats = Counter()
    records = [rec for f in files for rec in iter_records(f, stats)]
    if stats["lines"] and stats["malformed"] / stats["lines"] > args.max_malformed:
        raise DataError(
            f"{stats['malformed']} of {stats['lines']} record lines malformed "
            f"(limit {args.max_malformed:.0%}); nothing written")
    if not records:
        raise DataError("no usable records")
    # frequencies come from the whole corpus; the split is by record
    keep = frequent_fields(records, args.min_field_count, whitelist)
    rng = np.random.default_rng(args.seed)
    dev = set(rng.permutation(len(records))[:int(round(args.dev_fraction * len(records)))].tolist())
    train_t = [t for i, rec in enumerate(records) if i not in dev for t in record_triples(rec, keep)]
    dev_t = [t for i, rec in enumerate(records) if i in dev for t in record_triples(rec, keep)]
    with atomic_text(args.out_train) as fh:
        dump_jsonl(train_t, fh)
    with atomic_text(args.out_dev) as fh:
        dump_jsonl(dev_t, fh)
    print(f"records={len(records)} skipped={stats['skipped']} malformed_lines={stats['malformed']} "
          f"questions={len(keep)} train_triples={len(train_t)} dev_triples={len(dev_t)}")
    return OK


def cmd_sample_test(args):
    triples = read_triples(args.triples)
    examples = sample_eval_candidates(triples, args.size, np.random.default_rng(args.seed))
    with atomic_text(args.out) as fh:
        dump_jsonl(examples, fh)
    print(f"examples={len(examples)} questions={len({e.question for e in examples})}")
    return OK


# -- train ---------------------------------------------------------------------------


def cmd_train(args):
    overrides = {"seed": args.seed, "mode": args.mode, "eoa_rule": args.eoa_rule, "steps": args.steps}
    try:
        cfg = load_config(args.config, overrides)
    except (ValueError, OSError) as exc:
        raise UsageError(f"bad config: {exc}") from exc
    triples = read_triples(args.triples)
    if not triples:
        raise DataError(f"no triples in {args.triples}")
    questions = cfg.questions or sorted({t.question for t in triples})
    unknown = {t.question for t in triples} - set(questions)
    if unknown:
        raise DataError(f"triples use questions missing from the config: {', '.join(sorted(unknown))}")
    cfg = cfg.replace(questions=list(questions))
    model = SMGModel(cfg, build_vocab(triples, cfg.min_count), questions)
    log_path = args.log or args.out + ".log"

    def on_step(row):
        if args.save_every and row[0] % args.save_every == 0:
            checkpoint.save(model, args.out)

    with open(log_path, "a", encoding="utf-8") as log_fh:
        try:
            history = train(model, triples, log_fh=log_fh, on_step=on_step)
        except NumericalError as exc:
            log_fh.write(f"aborted: {exc}\n")
            kept = "kept" if os.path.exists(args.out) else "none written"
            print(f"numerical failure: {exc}; last good checkpoint {kept}", file=sys.stderr)
            return NUMERIC
    checkpoint.save(model, args.out)
    step, la, lr, le, total = history[-1] if history else (0, 0.0, 0.0, 0.0, 0.0)
    print(f"steps={step} L_A={la:.6f} L_recon={lr:.6f} L_eoa={le:.6f} L={total:.6f} checkpoint={args.out}")
    return OK


# -- edit ------------------------------------------------------------------------------


def read_text(path):
    if path == "-":
        return tokenize(sys.stdin.read())
    try:
        with open(path, encoding="utf-8") as fh:
            return tokenize(fh.read())
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def cmd_edit(args):
    model = _load_model(args.model)
    document = read_text(args.document)
    new_answer = tokenize(args.new_answer)
    if not document or not new_answer:
        raise UsageError("document and new answer must be non-empty")
    model.question_index(args.question)
    if args.template_source == "gold":
        if args.gold_template is None:
            raise UsageError("--template-source gold needs --gold-template")
        template = read_text(args.gold_template)
        mask = template_mask(template).tolist()
    else:
        mask = model.select_mask(document, args.question).tolist()
        template = make_template(document, mask)
    result = edit_document(model, template, new_answer, l_max=args.l_max,
                           allow_empty_fill=args.allow_empty_fill or None)
    if args.show_mask:
        print("mask\t" + " ".join(str(m) for m in mask))
        print("template\t" + " ".join(template))
    print(" ".join(result.tokens))
    return OK


def _load_model(path):
    try:
        return checkpoint.load(path)
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc


# -- evaluate ------------------------------------------------------------------------------


def cmd_evaluate(args):
    pred, gold, orig = read_lines(args.pred), read_lines(args.gold), read_lines(args.orig)
    if not (len(pred) == len(gold) == len(orig)):
        raise DataError(f"misaligned files: {len(pred)} predictions, {len(gold)} gold, {len(orig)} original lines")
    kwargs = {}
    if args.lm:
        kwargs["lm"] = KnLanguageModel.load(args.lm)
    if args.answer_f1:
        a_pred, a_gold = read_lines(args.answer_f1[0]), read_lines(args.answer_f1[1])
        if not (len(a_pred) == len(a_gold) == len(pred)):
            raise DataError("answer files are not aligned with the documents")
        kwargs.update(answers_pred=a_pred, answers_gold=a_gold)
    if args.template:
        templates = read_lines(args.template)
        if len(templates) != len(pred):
            raise DataError("template file is not aligned with the documents")
        kwargs["templates_pred"] = templates
    report = evaluate(pred, gold, orig, alpha=args.alpha, **kwargs)
    with atomic_text(args.report) as fh:
        fh.write(report.text())
    sys.stdout.write(report.text())
    return OK


# -- lm ------------------------------------------------------------------------------------


def cmd_lm_train(args):
    sentences = [s for s in read_lines(args.corpus) if s]
    try:
        lm = kn_train(sentences, order=args.order)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    lm.save(args.out)
    print(f"order={lm.order} vocab={lm.vocab_size} discount={lm.discount:.6f}")
    return OK


def cmd_lm_ppl(args):
    lm = KnLanguageModel.load(args.model)
    sentences = [s for s in read_lines(args.text) if s]
    if not sentences:
        raise DataError(f"no sentences in {args.text}")
    print(f"perplexity\t{corpus_perplexity(lm, sentences):.6f}")
    return OK


# -- parser --------------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="smgedit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("build-data", help="records -> train/dev triple files")
    s.add_argument("--records", required=True, help="record file or directory of record files")
    s.add_argument("--out-train", required=True)
    s.add_argument("--out-dev", required=True)
    s.add_argument("--min-field-count", type=int, default=DEFAULT_MIN_FIELD_COUNT)
    s.add_argument("--whitelist", help="file with one field name per line (default: built-in 26 fields)")
    s.add_argument("--dev-fraction", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-malformed", type=float, default=0.1,
                   help="fail when more than this fraction of record lines is malformed")
    s.set_defaults(func=cmd_build_data)

    s = sub.add_parser("sample-test", help="sample edit candidates with changed answers")
    s.add_argument("--triples", required=True)
    s.add_argument("--size", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample_test)

    s = sub.add_parser("train", help="train a model and write a checkpoint")
    s.add_argument("--triples", required=True)
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--mode", choices=["smg", "seq2seq"])
    s.add_argument("--eoa-rule", choices=["corrected", "printed"])
    s.add_argument("--steps", type=int)
    s.add_argument("--log", help="training log path (default: <out>.log)")
    s.add_argument("--save-every", type=int, default=0, help="also checkpoint every N steps")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("edit", help="edit one document")
    s.add_argument("--model", required=True)
    s.add_argument("--document", required=True, help="document file ('-' for stdin)")
    s.add_argument("--question", required=True)
    s.add_argument("--new-answer", required=True)
    s.add_argument("--template-source", choices=["predicted", "gold"], default="predicted")
    s.add_argument("--gold-template", help="template file with [M] blanks, used with --template-source gold")
    s.add_argument("--l-max", type=int, default=10)
    s.add_argument("--show-mask", action="store_true")
    s.add_argument("--allow-empty-fill", action="store_true")
    s.set_defaults(func=cmd_edit)

    s = sub.add_parser("evaluate", help="score predictions against gold and original documents")
    s.add_argument("--pred", required=True)
    s.add_argument("--gold", required=True)
    s.add_argument("--orig", required=True)
    s.add_argument("--alpha", type=float, default=0.9)
    s.add_argument("--report", required=True)
    s.add_argument("--lm", help="Kneser-Ney model file for perplexity")
    s.add_argument("--answer-f1", nargs=2, metavar=("PRED", "GOLD"))
    s.add_argument("--template", metavar="PRED", help="predicted templates for template BLEU")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("lm", help="Kneser-Ney language model")
    lm_sub = s.add_subparsers(dest="lm_command", required=True, parser_class=_Parser)
    t = lm_sub.add_parser("train")
    t.add_argument("--corpus", required=True)
    t.add_argument("--order", type=int, default=3)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_lm_train)
    t = lm_sub.add_parser("ppl")
    t.add_argument("--model", required=True)
    t.add_argument("--text", required=True)
    t.set_defaults(func=cmd_lm_ppl)
    return p


def main(argv=None):
    logging.basicConfig(level=os.environ.get("SMGEDIT_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, UnknownQuestionError) as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return USAGE
    except (DataError, RecordFormatError, checkpoint.CheckpointError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERIC


if __name__ == "__main__":
    sys.exit(main())
