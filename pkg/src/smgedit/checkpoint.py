"""Binary checkpoint container.

All integers are little-endian ``uint32``; all arrays little-endian float64::

    magic        8 bytes  b"SMGCKPT\\0"
    version      u32      currently 1
    vocab_size   u32
    hparams      u32 byte length, then UTF-8 ``key=value`` lines
    vocabulary   vocab_size entries of (u32 byte length, UTF-8 token)
    n_params     u32
    per parameter:
        name length u32, name (UTF-8), rank u32, rank x u32 dims,
        prod(dims) float64 values in row-major order

Writes go to a temporary file in the target directory and are renamed into
place, so a failed save never leaves a partial checkpoint.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .config import RunConfig
from .corpus import RESERVED, Vocabulary
from .store import ParamStore

MAGIC = b"SMGCKPT\0"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _u32(n):
    return struct.pack("<I", n)


def _blob(data):
    return _u32(len(data)) + data


def to_bytes(model):
    parts = [MAGIC, _u32(VERSION), _u32(len(model.vocab))]
    cfg = model.cfg.replace(questions=list(model.questions))
    hp = "".join(f"{k}={v}\n" for k, v in cfg.to_pairs())
    parts.append(_blob(hp.encode("utf-8")))
    for tok in model.vocab.itos:
        parts.append(_blob(tok.encode("utf-8")))
    names = model.store.names()
    parts.append(_u32(len(names)))
    for name in names:
        arr = model.store[name].values
        parts.append(_blob(name.encode("utf-8")))
        parts.append(_u32(arr.ndim))
        parts.extend(_u32(d) for d in arr.shape)
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(parts)


def save(model, path):
    data = to_bytes(model)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ckpt-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, data):
        self.data, self.pos = data, 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise CheckpointError("truncated checkpoint")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def blob(self):
        return self.take(self.u32())


def from_bytes(data):
    from .model import SMGModel

    r = _Reader(data)
    if r.take(8) != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic)")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    vocab_size = r.u32()
    pairs = [line.split("=", 1) for line in r.blob().decode("utf-8").splitlines() if line]
    cfg = RunConfig.from_pairs(pairs)
    itos = [r.blob().decode("utf-8") for _ in range(vocab_size)]
    if tuple(itos[:len(RESERVED)]) != RESERVED:
        raise CheckpointError("reserved vocabulary entries out of place")
    vocab = Vocabulary(itos[len(RESERVED):])
    store = ParamStore(cfg.optimizer, clip_norm=cfg.clip_norm or None)
    for _ in range(r.u32()):
        name = r.blob().decode("utf-8")
        shape = tuple(r.u32() for _ in range(r.u32()))
        count = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(r.take(8 * count), dtype="<f8").reshape(shape)
        store.add(name, values.astype(np.float64))
    if r.pos != len(data):
        raise CheckpointError("trailing bytes after parameters")
    return SMGModel(cfg, vocab, cfg.questions, store=store)


def load(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
