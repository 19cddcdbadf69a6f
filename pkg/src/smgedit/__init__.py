"""Controllable text editing with a select-mask-generate model."""

from .config import TOY_CONFIG, RunConfig, load_config
from .corpus import EditExample, Triple, Vocabulary, build_triples, build_vocab, tokenize
from .model import SMGModel, train
from .partial_generator import edit_document, partial_decode, transition

__version__ = "0.1.0"

__all__ = [
    "EditExample", "RunConfig", "SMGModel", "TOY_CONFIG", "Triple", "Vocabulary",
    "build_triples", "build_vocab", "edit_document", "load_config", "partial_decode",
    "tokenize", "train", "transition",
]
