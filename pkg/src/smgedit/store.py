"""Named parameter storage and the optimizer step."""

from __future__ import annotations

import numpy as np

from .tensor import DTYPE, NumericalError, Tensor, backward


class ParamStore:
    """All learnable arrays of a model, keyed by name, plus optimizer state.

    ``optimizer`` is ``"sgd"`` (plain gradient descent) or ``"adam"``.
    """

    def __init__(self, optimizer="sgd", beta1=0.9, beta2=0.999, eps=1e-8, clip_norm=None):
        if optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {optimizer!r}")
        self.params: dict[str, Tensor] = {}
        self.optimizer = optimizer
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.clip_norm = clip_norm
        self.moments: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        self.step_count = 0

    def add(self, name, values):
        if name in self.params:
            raise KeyError(f"duplicate parameter {name!r}")
        t = Tensor(np.array(values, dtype=DTYPE), requires_grad=True, op=name)
        self.params[name] = t
        return t

    def __getitem__(self, name):
        return self.params[name]

    def __contains__(self, name):
        return name in self.params

    def __iter__(self):
        return iter(self.params)

    def names(self):
        return list(self.params)

    def num_parameters(self):
        return sum(p.values.size for p in self.params.values())

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def grad_norm(self, names=None):
        names = self.params if names is None else names
        sq = 0.0
        for n in names:
            g = self.params[n].grad
            if g is not None:
                sq += float((g * g).sum())
        return sq ** 0.5

    def apply_gradients(self, lr):
        """One optimizer update from the accumulated ``grad`` fields."""
        for name, p in self.params.items():
            if p.grad is not None and not np.isfinite(p.grad).all():
                self.zero_grad()
                raise NumericalError(f"non-finite gradient for parameter {name!r}")
        scale = 1.0
        if self.clip_norm is not None:
            norm = self.grad_norm()
            if norm > self.clip_norm:
                scale = self.clip_norm / norm
        self.step_count += 1
        t = self.step_count
        for name, p in self.params.items():
            if p.grad is None:
                continue
            g = p.grad * scale
            if self.optimizer == "sgd":
                p.values -= lr * g
                continue
            m, v = self.moments.get(name, (np.zeros_like(g), np.zeros_like(g)))
            m = self.beta1 * m + (1 - self.beta1) * g
            v = self.beta2 * v + (1 - self.beta2) * g * g
            self.moments[name] = (m, v)
            m_hat = m / (1 - self.beta1 ** t)
            v_hat = v / (1 - self.beta2 ** t)
            p.values -= lr * m_hat / (np.sqrt(v_hat) + self.eps)
        self.zero_grad()


def backward_and_update(loss, store, lr):
    """Reverse sweep from ``loss``, optimizer step, then clear gradients.

    A non-finite loss raises :class:`NumericalError` before any parameter is
    touched.
    """
    store.zero_grad()
    try:
        backward(loss)
    except NumericalError:
        store.zero_grad()
        raise
    store.apply_gradients(lr)
    return store
