import time

import numpy as np
import pytest

import acceptance_log

from smgedit import synthetic as syn
from smgedit.config import TOY_CONFIG, RunConfig
from smgedit.corpus import Triple, build_vocab
from smgedit.model import SMGModel, train

TINY = RunConfig(embedding_size=6, selector_hidden=5, decoder_hidden=7, steps=1)

TINY_TRIPLES = [
    Triple("name", "ann smith is a poet .".split(), ["ann", "smith"]),
    Triple("occupation", "bob is a painter .".split(), ["painter"]),
]


@pytest.fixture
def tiny_model():
    return SMGModel(TINY, build_vocab(TINY_TRIPLES), ["name", "occupation"], rng=np.random.default_rng(3))


@pytest.fixture(scope="session")
def toy_bios():
    return syn.make_biographies(200, seed=0)


@pytest.fixture(scope="session")
def toy_model(toy_bios):
    """The toy overfit model, trained once per session (about a minute)."""
    triples = syn.make_triples(toy_bios)
    cfg = TOY_CONFIG.replace(questions=list(syn.QUESTIONS))
    model = SMGModel(cfg, build_vocab(triples), cfg.questions, rng=np.random.default_rng(cfg.seed))
    start = time.perf_counter()
    model.history = train(model, triples, rng=np.random.default_rng(cfg.seed + 1))
    model.train_seconds = time.perf_counter() - start
    return model


@pytest.fixture(scope="session")
def toy_seq2seq(toy_bios, toy_model):
    """Full-generation baseline trained like the toy model, sharing its vocabulary."""
    triples = syn.make_triples(toy_bios)
    cfg = toy_model.cfg.replace(mode="seq2seq")
    model = SMGModel(cfg, toy_model.vocab, cfg.questions, rng=np.random.default_rng(cfg.seed))
    train(model, triples, rng=np.random.default_rng(cfg.seed + 1))
    return model


def pytest_terminal_summary(terminalreporter):
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(acceptance_log.LINES):
            terminalreporter.write_line(line)
