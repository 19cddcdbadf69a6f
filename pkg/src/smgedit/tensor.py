"""Small dense-array autodiff kernel.

Every value is a float64 numpy array wrapped in :class:`Tensor`.  Operations
build a graph of parent links with per-node backward closures; :func:`backward`
walks it in reverse topological order.  There is no global tape, so forward
passes that do not call :func:`backward` never touch shared state.
"""

from __future__ import annotations

import numpy as np

DTYPE = np.float64


class NumericalError(FloatingPointError):
    """Raised when a loss or gradient stops being finite."""


class Tensor:
    __slots__ = ("values", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, values, requires_grad=False, parents=(), backward=None, op="const"):
        self.values = np.asarray(values, dtype=DTYPE)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward
        self.op = op

    @property
    def shape(self):
        return self.values.shape

    def __len__(self):
        return self.values.shape[0]

    def __repr__(self):
        return f"Tensor(op={self.op}, shape={self.shape})"

    def item(self):
        return float(self.values)

    def accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=DTYPE, copy=True)
        else:
            self.grad += g

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return index(self, key)


def _wrap(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(values, parents, backward, op):
    parents = tuple(p for p in parents if isinstance(p, Tensor))
    needs = any(p.requires_grad for p in parents)
    if not needs:
        return Tensor(values, op=op)
    return Tensor(values, requires_grad=True, parents=parents, backward=backward, op=op)


def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` after numpy broadcasting."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise algebra


def add(a, b):
    a, b = _wrap(a), _wrap(b)

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g, b.shape))

    return _node(a.values + b.values, (a, b), backward, "add")


def sub(a, b):
    a, b = _wrap(a), _wrap(b)

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(-g, b.shape))

    return _node(a.values - b.values, (a, b), backward, "sub")


def mul(a, b):
    a, b = _wrap(a), _wrap(b)

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g * b.values, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g * a.values, b.shape))

    return _node(a.values * b.values, (a, b), backward, "mul")


def div(a, b):
    a, b = _wrap(a), _wrap(b)
    out = a.values / b.values

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g / b.values, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(-g * out / b.values, b.shape))

    return _node(out, (a, b), backward, "div")


def clamp_min(a, lo):
    """``max(a, lo)``; gradient passes where ``a >= lo``."""
    keep = a.values >= lo

    def backward(g):
        a.accumulate(g * keep)

    return _node(np.where(keep, a.values, lo), (a,), backward, "clamp_min")


def sigmoid(a):
    out = 1.0 / (1.0 + np.exp(-a.values))

    def backward(g):
        a.accumulate(g * out * (1.0 - out))

    return _node(out, (a,), backward, "sigmoid")


def tanh(a):
    out = np.tanh(a.values)

    def backward(g):
        a.accumulate(g * (1.0 - out * out))

    return _node(out, (a,), backward, "tanh")


def log(a):
    def backward(g):
        a.accumulate(g / a.values)

    return _node(np.log(a.values), (a,), backward, "log")


# ---------------------------------------------------------------------------
# shape and reductions


def matmul(a, b):
    a, b = _wrap(a), _wrap(b)

    def backward(g):
        av, bv = a.values, b.values
        if a.requires_grad:
            if bv.ndim == 1:
                ga = np.outer(g, bv) if av.ndim == 2 else g * bv
            else:
                ga = g @ bv.T if av.ndim == 2 else bv @ g
            a.accumulate(ga)
        if b.requires_grad:
            if av.ndim == 1:
                gb = np.outer(av, g) if bv.ndim == 2 else g * av
            else:
                gb = av.T @ g if bv.ndim == 2 else g @ av
            b.accumulate(gb)

    return _node(a.values @ b.values, (a, b), backward, "matmul")


def total(a, axis=None):
    """Sum over ``axis`` (all axes by default)."""

    def backward(g):
        if axis is None:
            a.accumulate(np.broadcast_to(g, a.shape))
        else:
            a.accumulate(np.broadcast_to(np.expand_dims(g, axis), a.shape))

    return _node(a.values.sum(axis=axis), (a,), backward, "sum")


def mean(a, axis=None):
    n = a.values.size if axis is None else a.shape[axis]
    return total(a, axis) * (1.0 / n)


def index(a, key):
    def backward(g):
        full = np.zeros_like(a.values)
        np.add.at(full, key, g)
        a.accumulate(full)

    return _node(a.values[key], (a,), backward, "index")


def take_rows(table, ids):
    """Embedding lookup: rows ``ids`` of a 2-D table."""
    ids = np.asarray(ids, dtype=np.intp)

    def backward(g):
        full = np.zeros_like(table.values)
        np.add.at(full, ids, g)
        table.accumulate(full)

    return _node(table.values[ids], (table,), backward, "take_rows")


def take_cols(a, cols):
    cols = np.asarray(cols, dtype=np.intp)

    def backward(g):
        full = np.zeros_like(a.values)
        np.add.at(full, (..., cols), g)
        a.accumulate(full)

    return _node(a.values[..., cols], (a,), backward, "take_cols")


def concat(parts, axis=-1):
    parts = [_wrap(p) for p in parts]
    out = np.concatenate([p.values for p in parts], axis=axis)
    sizes = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def backward(g):
        for p, gp in zip(parts, np.split(g, sizes, axis=axis)):
            if p.requires_grad:
                p.accumulate(gp)

    return _node(out, parts, backward, "concat")


def stack(parts):
    return concat([reshape(p, (1,) + p.shape) for p in parts], axis=0)


def reshape(a, shape):
    def backward(g):
        a.accumulate(g.reshape(a.shape))

    return _node(a.values.reshape(shape), (a,), backward, "reshape")


def repeat_rows(v, n):
    """Tile a vector into an ``(n, d)`` matrix."""

    def backward(g):
        v.accumulate(g.sum(axis=0))

    return _node(np.broadcast_to(v.values, (n,) + v.shape).copy(), (v,), backward, "repeat_rows")


def reverse_rows(a):
    def backward(g):
        a.accumulate(g[::-1])

    return _node(a.values[::-1].copy(), (a,), backward, "reverse_rows")


def max_pool_over_time(seq):
    """Element-wise maximum over a sequence of equal-length vectors.

    ``seq`` may be a list of 1-D tensors or a single ``(n, d)`` tensor.
    Ties send the gradient to the earliest position.
    """
    if isinstance(seq, Tensor):
        mat = seq
    else:
        if len(seq) == 0:
            raise ValueError("max_pool_over_time: empty sequence")
        mat = stack(list(seq))
    if mat.shape[0] == 0:
        raise ValueError("max_pool_over_time: empty sequence")
    arg = mat.values.argmax(axis=0)
    cols = np.arange(mat.shape[1])

    def backward(g):
        full = np.zeros_like(mat.values)
        full[arg, cols] = g
        mat.accumulate(full)

    return _node(mat.values[arg, cols], (mat,), backward, "max_pool")


# ---------------------------------------------------------------------------
# distributions


def softmax(logits, axis=-1):
    if logits.values.size == 0:
        raise ValueError("softmax: empty input")
    z = logits.values - logits.values.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        logits.accumulate(out * (g - (g * out).sum(axis=axis, keepdims=True)))

    return _node(out, (logits,), backward, "softmax")


def log_softmax(logits, axis=-1):
    z = logits.values - logits.values.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    out = z - lse

    def backward(g):
        p = np.exp(out)
        logits.accumulate(g - p * g.sum(axis=axis, keepdims=True))

    return _node(out, (logits,), backward, "log_softmax")


def gumbel_binary_sample(logits, temperature=1.0, rng=None, hard=True, noise=None):
    """Straight-through Gumbel-softmax over the last axis (two categories).

    The forward value is the one-hot argmax of ``(logits + g) / temperature``;
    the backward pass uses the Jacobian of the tempered softmax.  ``noise``
    overrides the Gumbel draw (used for gradient checks).  With ``hard=False``
    the relaxed sample itself is returned.
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if noise is None:
        if rng is None:
            raise ValueError("gumbel_binary_sample needs an rng or explicit noise")
        u = rng.random(logits.shape)
        noise = -np.log(-np.log(u + 1e-20) + 1e-20)
    z = (logits.values + noise) / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    soft = e / e.sum(axis=-1, keepdims=True)
    if hard:
        out = np.zeros_like(soft)
        np.put_along_axis(out, soft.argmax(axis=-1)[..., None], 1.0, axis=-1)
    else:
        out = soft

    def backward(g):
        logits.accumulate(soft * (g - (g * soft).sum(axis=-1, keepdims=True)) / temperature)

    return _node(out, (logits,), backward, "gumbel")


# ---------------------------------------------------------------------------
# layers


def linear(x, weight, bias=None):
    """``x @ W.T + b`` for a vector or a row-stacked matrix ``x``."""
    if x.shape[-1] != weight.shape[1]:
        raise ValueError(
            f"linear: input dim {x.shape[-1]} does not match weight {weight.shape}"
        )
    out = matmul(x, transpose(weight))
    return out if bias is None else add(out, bias)


def transpose(a):
    def backward(g):
        a.accumulate(g.T)

    return _node(a.values.T, (a,), backward, "transpose")


def _sig(z):
    return 1.0 / (1.0 + np.exp(-z))


def _lstm_forward(xh, c, W, b, H):
    z = W @ xh + b
    i, f, o = _sig(z[:H]), _sig(z[H:2 * H]), _sig(z[3 * H:])
    gg = np.tanh(z[2 * H:3 * H])
    c_new = f * c + i * gg
    tc = np.tanh(c_new)
    return o * tc, c_new, (i, f, gg, o, tc)


def _lstm_backward(dh, dc, c_prev, gates, W):
    i, f, gg, o, tc = gates
    dc = dc + dh * o * (1.0 - tc * tc)
    dz = np.concatenate([
        dc * gg * i * (1.0 - i),
        dc * c_prev * f * (1.0 - f),
        dc * i * (1.0 - gg * gg),
        dh * tc * o * (1.0 - o),
    ])
    return dz, dc * f


def lstm_step(x, state, W, b):
    """One LSTM cell update.

    ``state`` is a ``(2, H)`` tensor holding the hidden row and the cell row;
    the result has the same layout.  Gate order in ``W`` is input, forget,
    candidate, output.
    """
    H = state.shape[1]
    if W.shape != (4 * H, x.shape[0] + H):
        raise ValueError(f"lstm_step: weight {W.shape} incompatible with x {x.shape}, hidden {H}")
    h, c = state.values
    xh = np.concatenate([x.values, h])
    h_new, c_new, gates = _lstm_forward(xh, c, W.values, b.values, H)

    def backward(g):
        dz, dc_prev = _lstm_backward(g[0], g[1], c, gates, W.values)
        if W.requires_grad:
            W.accumulate(np.outer(dz, xh))
        if b.requires_grad:
            b.accumulate(dz)
        dxh = W.values.T @ dz
        if x.requires_grad:
            x.accumulate(dxh[: x.shape[0]])
        if state.requires_grad:
            state.accumulate(np.stack([dxh[x.shape[0]:], dc_prev]))

    return _node(np.stack([h_new, c_new]), (x, state, W, b), backward, "lstm_step")


def lstm_sequence(X, W, b, state=None, reverse=False):
    """Run an LSTM over the rows of ``X`` and return the ``(n, H)`` hidden rows.

    Equivalent to chaining :func:`lstm_step`, with one graph node for the
    whole sequence.  With ``reverse=True`` the rows are consumed last to first
    and the outputs are written back in the original row order.
    """
    n, d = X.shape
    if n == 0:
        raise ValueError("lstm_sequence: empty sequence")
    H = W.shape[0] // 4
    if W.shape[1] != d + H:
        raise ValueError(f"lstm_sequence: weight {W.shape} incompatible with input dim {d}")
    if state is None:
        h, c = np.zeros(H), np.zeros(H)
    else:
        h, c = state.values
    order = range(n - 1, -1, -1) if reverse else range(n)
    out = np.empty((n, H))
    cache = []
    Wv, bv = W.values, b.values
    for t in order:
        xh = np.concatenate([X.values[t], h])
        c_prev = c
        h, c, gates = _lstm_forward(xh, c_prev, Wv, bv, H)
        out[t] = h
        cache.append((t, xh, c_prev, gates))

    def backward(g):
        dW = np.zeros_like(Wv)
        db = np.zeros_like(bv)
        dX = np.zeros_like(X.values)
        dh_next = np.zeros(H)
        dc_next = np.zeros(H)
        for t, xh, c_prev, gates in reversed(cache):
            dz, dc_next = _lstm_backward(g[t] + dh_next, dc_next, c_prev, gates, Wv)
            dW += np.outer(dz, xh)
            db += dz
            dxh = Wv.T @ dz
            dX[t] = dxh[:d]
            dh_next = dxh[d:]
        if W.requires_grad:
            W.accumulate(dW)
        if b.requires_grad:
            b.accumulate(db)
        if X.requires_grad:
            X.accumulate(dX)
        if state is not None and state.requires_grad:
            state.accumulate(np.stack([dh_next, dc_next]))

    return _node(out, (X, W, b, state), backward, "lstm_sequence")


def bilstm_encode(X, Wf, bf, Wb, bb):
    """Bidirectional LSTM: per-row ``[forward ; backward]`` hidden states.

    ``X`` is an ``(n, d)`` tensor or a non-empty list of 1-D tensors.
    """
    if not isinstance(X, Tensor):
        if len(X) == 0:
            raise ValueError("bilstm_encode: empty sequence")
        X = stack(list(X))
    if X.shape[0] == 0:
        raise ValueError("bilstm_encode: empty sequence")
    fwd = lstm_sequence(X, Wf, bf)
    bwd = lstm_sequence(X, Wb, bb, reverse=True)
    return concat([fwd, bwd], axis=1)


# ---------------------------------------------------------------------------
# reverse sweep


def _topological(root):
    order, seen = [], set()
    stack_ = [(root, False)]
    while stack_:
        node, done = stack_.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack_.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack_.append((p, False))
    return order


def backward(loss, release=True):
    """Accumulate d(loss)/d(leaf) into every reachable leaf's ``grad``.

    Intermediate gradients are dropped afterwards and, with ``release``, the
    graph links are cut so the tape can be garbage collected.
    """
    if loss.values.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not np.isfinite(loss.values).all():
        raise NumericalError(f"non-finite loss; first bad node: {_first_bad(loss)}")
    order = _topological(loss)
    loss.grad = np.ones_like(loss.values)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
    for node in order:
        if node._backward is not None:
            node.grad = None
            if release:
                node._parents = ()
                node._backward = None


def _first_bad(root):
    for node in _topological(root):
        if not np.isfinite(node.values).all():
            return node.op
    return root.op
