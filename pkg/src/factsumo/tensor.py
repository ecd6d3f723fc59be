"""Small reverse-mode autodiff core over float64 numpy arrays.

Every forward op records its parents and a closure that pushes the output
gradient back to them. ``Tensor.backward`` walks the recorded graph in reverse
topological order and accumulates gradients additively, so a value used twice
receives the sum of both contributions.
"""

from contextlib import contextmanager

import numpy as np

DTYPE = np.float64


class DimensionError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


def _check_finite(data, op):
    if not np.isfinite(data).all():
        raise NonFiniteError(f"non-finite values produced by {op}")


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (reverses numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")
    # make numpy defer to the reflected Tensor operators
    __array_ufunc__ = None

    def __init__(self, data, requires_grad=False, name=None, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=DTYPE)
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self):
        return self.data

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=DTYPE, copy=True)
        else:
            self.grad += g

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise DimensionError("backward() without a seed gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(np.asarray(grad, dtype=DTYPE))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                # interior gradients are not needed after propagation
                if node._parents:
                    node.grad = None

    # arithmetic sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __rtruediv__(self, other):
        return div(other, self)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data, name=None):
    return Tensor(np.array(data, dtype=DTYPE, copy=True), requires_grad=True, name=name)


_GRAD_ENABLED = [True]


@contextmanager
def no_grad():
    """Build no graph inside the block (forward-only evaluation)."""
    _GRAD_ENABLED.append(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.pop()


def _make(data, parents, backward, op):
    _check_finite(data, op)
    needs = _GRAD_ENABLED[-1] and any(p.requires_grad for p in parents)
    if not needs:
        return Tensor(data)
    return Tensor(data, requires_grad=True, _parents=parents, _backward=backward)


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.shape))

    return _make(a.data + b.data, (a, b), backward, "add")


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g, b.shape))

    return _make(a.data - b.data, (a, b), backward, "sub")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return _make(a.data * b.data, (a, b), backward, "mul")


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g / b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g * out / b.data, b.shape))

    return _make(out, (a, b), backward, "div")


def matmul(a, b):
    """Matrix product over the last two axes; leading axes broadcast.

    A 1-D right operand is not supported; reshape it to a column first.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs at least 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner dimensions differ: {a.shape} x {b.shape}")

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape))
        if b.requires_grad:
            if b.ndim == 2 and a.ndim > 2:
                k, n = b.shape
                gb = a.data.reshape(-1, k).T @ g.reshape(-1, n)
            else:
                gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape)
            b._accumulate(gb)

    return _make(a.data @ b.data, (a, b), backward, "matmul")


def tanh(x):
    x = as_tensor(x)
    out = np.tanh(x.data)

    def backward(g):
        x._accumulate(g * (1.0 - out * out))

    return _make(out, (x,), backward, "tanh")


def _stable_sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(x):
    x = as_tensor(x)
    out = _stable_sigmoid(x.data)

    def backward(g):
        x._accumulate(g * out * (1.0 - out))

    return _make(out, (x,), backward, "sigmoid")


def exp(x):
    x = as_tensor(x)
    out = np.exp(x.data)

    def backward(g):
        x._accumulate(g * out)

    return _make(out, (x,), backward, "exp")


def log(x):
    x = as_tensor(x)

    def backward(g):
        x._accumulate(g / x.data)

    with np.errstate(divide="ignore", invalid="ignore"):  # reported as NonFiniteError instead
        out = np.log(x.data)
    return _make(out, (x,), backward, "log")


def tsum(x, axis=None, keepdims=False):
    x = as_tensor(x)
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        x._accumulate(np.broadcast_to(g, x.shape))

    return _make(out, (x,), backward, "sum")


def mean(x, axis=None, keepdims=False):
    x = as_tensor(x)
    count = x.data.size if axis is None else x.shape[axis]
    return mul(tsum(x, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(x, shape):
    x = as_tensor(x)

    def backward(g):
        x._accumulate(g.reshape(x.shape))

    return _make(x.data.reshape(shape), (x,), backward, "reshape")


def swapaxes(x, a1, a2):
    x = as_tensor(x)

    def backward(g):
        x._accumulate(np.swapaxes(g, a1, a2))

    return _make(np.swapaxes(x.data, a1, a2), (x,), backward, "swapaxes")


def _is_basic_index(index):
    items = index if isinstance(index, tuple) else (index,)
    return all(isinstance(i, (slice, int, type(Ellipsis))) or i is None for i in items)


def getitem(x, index):
    x = as_tensor(x)
    basic = _is_basic_index(index)

    def backward(g):
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        if basic:
            x.grad[index] += g
        else:
            np.add.at(x.grad, index, g)

    return _make(x.data[index], (x,), backward, "getitem")


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                t._accumulate(g[tuple(sl)])

    return _make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), backward, "concat")


def stack(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]

    def backward(g):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t._accumulate(np.take(g, i, axis=axis))

    return _make(np.stack([t.data for t in tensors], axis=axis), tuple(tensors), backward, "stack")


def masked_softmax(x, mask=None, axis=-1):
    """Softmax along ``axis`` restricted to positions where ``mask`` is nonzero.

    Masked positions get exactly 0. A slice with no unmasked position yields
    all zeros instead of NaN.
    """
    x = as_tensor(x)
    if mask is None:
        keep = np.ones(x.shape, dtype=bool)
    else:
        keep = np.broadcast_to(np.asarray(mask) != 0, x.shape)
    shifted = np.where(keep, x.data, -np.inf)
    top = shifted.max(axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    e = np.where(keep, np.exp(np.where(keep, x.data - top, 0.0)), 0.0)
    denom = e.sum(axis=axis, keepdims=True)
    out = e / np.where(denom > 0, denom, 1.0)

    def backward(g):
        dot = (g * out).sum(axis=axis, keepdims=True)
        x._accumulate(out * (g - dot))

    return _make(out, (x,), backward, "softmax")


def softmax(x, axis=-1):
    return masked_softmax(x, None, axis=axis)


def log_softmax_np(z, axis=-1):
    top = z.max(axis=axis, keepdims=True)
    shifted = z - top
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def cross_entropy_with_logits(logits, labels):
    """Mean over the batch of -log softmax(logits)[label]."""
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2:
        raise DimensionError(f"logits must be batch x classes, got {logits.shape}")
    batch, classes = logits.shape
    if labels.shape != (batch,):
        raise DimensionError(f"expected {batch} labels, got shape {labels.shape}")
    if (labels < 0).any() or (labels >= classes).any():
        raise ValueError(f"labels must lie in [0, {classes})")
    logp = log_softmax_np(logits.data, axis=1)
    rows = np.arange(batch)
    loss = -logp[rows, labels].mean()

    def backward(g):
        grad = np.exp(logp)
        grad[rows, labels] -= 1.0
        logits._accumulate(g * grad / batch)

    return _make(np.asarray(loss), (logits,), backward, "cross_entropy")


def embedding(table, indices, padding_idx=None):
    """Row lookup ``table[indices]``; the padding row never receives gradient."""
    table = as_tensor(table)
    indices = np.asarray(indices, dtype=np.int64)

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, indices.reshape(-1), g.reshape(-1, table.shape[-1]))
        if padding_idx is not None:
            full[padding_idx] = 0.0
        table._accumulate(full)

    return _make(table.data[indices], (table,), backward, "embedding")
