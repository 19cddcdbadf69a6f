"""Run configuration: defaults < key=value file < explicit overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields


@dataclass
class RunConfig:
    embedding_size: int = 300
    selector_hidden: int = 200
    decoder_hidden: int = 200
    lambda_r: float = 1.0
    lambda_eoa: float = 10.0
    temperature: float = 1.0
    l_max: int = 10
    learning_rate: float = 0.1
    optimizer: str = "sgd"
    clip_norm: float = 0.0
    batch_size: int = 1
    steps: int = 1000
    seed: int = 0
    mode: str = "smg"
    eoa_rule: str = "corrected"
    selection_penalty: float = 0.0
    selector_signal: str = "all"
    lambda_answer_ae: float = 0.0
    init_scale: float = 0.1
    min_count: int = 1
    allow_empty_fill: bool = False
    log_every: int = 1
    questions: list = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("embedding_size", "selector_hidden", "decoder_hidden", "l_max", "batch_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.lambda_r < 0 or self.lambda_eoa < 0 or self.lambda_answer_ae < 0:
            raise ValueError("loss weights must be non-negative")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.mode not in ("smg", "seq2seq"):
            raise ValueError(f"mode must be smg or seq2seq, got {self.mode!r}")
        if self.eoa_rule not in ("corrected", "printed"):
            raise ValueError(f"eoa_rule must be corrected or printed, got {self.eoa_rule!r}")
        if self.selector_signal not in ("all", "answer"):
            raise ValueError(f"selector_signal must be all or answer, got {self.selector_signal!r}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be sgd or adam, got {self.optimizer!r}")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_pairs(self):
        """Flat ``(key, text)`` pairs in declaration order."""
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            out.append((f.name, ",".join(v) if isinstance(v, list) else str(v)))
        return out

    @classmethod
    def from_pairs(cls, pairs, base=None):
        base = base or cls()
        kinds = {f.name: f for f in fields(cls)}
        changes = {}
        for key, text in pairs:
            key = key.strip().replace("-", "_")
            if key not in kinds:
                raise ValueError(f"unknown config key {key!r}")
            changes[key] = _parse(getattr(base, key), text.strip())
        return dataclasses.replace(base, **changes)


def _parse(default, text):
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, list):
        return [q.strip() for q in text.split(",") if q.strip()]
    return text


def load_config(path=None, overrides=None, base=None):
    """Read a ``key = value`` file (``#`` comments allowed), then apply overrides."""
    cfg = base or RunConfig()
    if path is not None:
        pairs = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key = value")
                k, v = line.split("=", 1)
                pairs.append((k, v))
        cfg = RunConfig.from_pairs(pairs, cfg)
    if overrides:
        cfg = RunConfig.from_pairs([(k, str(v)) for k, v in overrides.items() if v is not None], cfg)
    return cfg


# Small config for tests and demos; trains on one core in a few minutes.
# The selector learns from the answer loss alone, helped by an answer
# autoencoding term and a softer straight-through backward.
TOY_CONFIG = RunConfig(
    embedding_size=32, selector_hidden=32, decoder_hidden=32,
    optimizer="adam", learning_rate=0.01, clip_norm=5.0, batch_size=4, steps=3000,
    temperature=5.0, selector_signal="answer", lambda_answer_ae=1.0,
)
