"""Reverse-mode automatic differentiation over numpy arrays.

A forward pass builds a DAG of Tensor nodes, each holding a float64 ndarray
value, its parents, and a vector-Jacobian closure. ``backward`` walks the
graph once in reverse topological order and accumulates gradients into the
parameter containers referenced by the leaves. Graphs are single use: a
second backward through the same loss raises GraphConsumed. Calling backward
on a different loss without zeroing gradients accumulates, by design.

Everything is double precision and deterministic: identical inputs rebuild
identical graphs and identical gradients, bit for bit.
"""

from __future__ import annotations

import numpy as np

from ..errors import GraphConsumed, ShapeMismatch

__all__ = [
    "Tensor", "const", "param", "backward",
    "add", "sub", "mul", "div", "neg", "exp", "tanh", "sigmoid", "sqrt",
    "matmul", "matvec", "jointwise_matvec", "tsum", "tmean", "reshape",
    "transpose", "concat", "stack", "cross", "vnorm", "softmax",
]


class Tensor:
    """One node of a recorded computation."""

    __slots__ = ("value", "_parents", "_vjp", "_needs", "_sink", "_g", "_consumed")

    def __init__(self, value, parents=(), vjp=None, sink=None):
        self.value = value
        self._parents = parents
        self._vjp = vjp
        self._sink = sink
        self._needs = sink is not None or any(p._needs for p in parents)
        self._g = None
        self._consumed = False

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

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

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def const(value) -> Tensor:
    """A leaf with no gradient."""
    return Tensor(np.asarray(value, dtype=np.float64))


def param(block) -> Tensor:
    """A leaf tied to a parameter container (anything with .values and .grad).

    The leaf shares the container's array; gradients reaching it are added
    into ``block.grad`` during backward.
    """
    return Tensor(block.values, sink=block)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else const(x)


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(param) into every reachable parameter container."""
    if loss._consumed:
        raise GraphConsumed("backward was already invoked on this recording")
    loss._consumed = True
    if loss.value.size != 1:
        raise ValueError(f"loss must be scalar, got shape {loss.shape}")
    if not loss._needs:
        return

    # reverse topological order via iterative post-order DFS; nodes are marked
    # visited when first expanded (not when pushed), otherwise a node shared
    # by several consumers can be finished before a later consumer's subtree
    order = []
    visited = set()
    work = [(loss, False)]
    while work:
        node, expanded = work.pop()
        if expanded:
            order.append(node)
            continue
        nid = id(node)
        if nid in visited:
            continue
        visited.add(nid)
        work.append((node, True))
        for p in node._parents:
            if p._needs and id(p) not in visited:
                work.append((p, False))

    loss._g = np.ones_like(loss.value)
    for node in reversed(order):
        g = node._g
        if g is None:
            continue
        if node._vjp is not None:
            for p, pg in zip(node._parents, node._vjp(g)):
                if pg is None or not p._needs:
                    continue
                p._g = pg if p._g is None else p._g + pg
        if node._sink is not None:
            node._sink.grad += g
        node._g = None


# ---------------------------------------------------------------------------
# op helpers
# ---------------------------------------------------------------------------

def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient down to ``shape`` after numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(
        a.value + b.value, (a, b),
        lambda g: (_unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape)),
    )


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(
        a.value - b.value, (a, b),
        lambda g: (_unbroadcast(g, a.value.shape), _unbroadcast(-g, b.value.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def vjp(g):
        return (
            _unbroadcast(g * b.value, a.value.shape) if a._needs else None,
            _unbroadcast(g * a.value, b.value.shape) if b._needs else None,
        )

    return Tensor(a.value * b.value, (a, b), vjp)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.value / b.value

    def vjp(g):
        return (
            _unbroadcast(g / b.value, a.value.shape) if a._needs else None,
            _unbroadcast(-g * out / b.value, b.value.shape) if b._needs else None,
        )

    return Tensor(out, (a, b), vjp)


def neg(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(-a.value, (a,), lambda g: (-g,))


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.value)
    return Tensor(out, (a,), lambda g: (g * out,))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.value)
    return Tensor(out, (a,), lambda g: (g * (1.0 - out * out),))


def _sigmoid_values(x: np.ndarray) -> np.ndarray:
    # exp overflow for very negative x saturates to inf and the quotient to
    # exactly 0.0, which is the correct limit; silence the warning only
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = _sigmoid_values(a.value)
    return Tensor(out, (a,), lambda g: (g * out * (1.0 - out),))


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    out = np.sqrt(a.value)
    return Tensor(out, (a,), lambda g: (g * 0.5 / out,))


def matmul(a, b) -> Tensor:
    """Stacked matrix product; leading batch dims broadcast."""
    a, b = as_tensor(a), as_tensor(b)
    if a.value.ndim < 2 or b.value.ndim < 2:
        raise ShapeMismatch("matmul operands must have >= 2 dims")

    def vjp(g):
        ga = gb = None
        if a._needs:
            ga = _unbroadcast(g @ np.swapaxes(b.value, -1, -2), a.value.shape)
        if b._needs:
            gb = _unbroadcast(np.swapaxes(a.value, -1, -2) @ g, b.value.shape)
        return ga, gb

    return Tensor(a.value @ b.value, (a, b), vjp)


def matvec(a, v) -> Tensor:
    """(..., m, n) @ (..., n) -> (..., m), composed from matmul and reshape."""
    v = as_tensor(v)
    col = reshape(v, v.value.shape + (1,))
    out = matmul(a, col)
    return reshape(out, out.value.shape[:-1])


def jointwise_matvec(w, x) -> Tensor:
    """Per-joint linear maps: w (J, O, I) applied to x (..., J, I) -> (..., J, O).

    Joint j's output depends only on joint j's input and weight block. The
    contraction runs as J stacked GEMMs with the joint axis leading.
    """
    w, x = as_tensor(w), as_tensor(x)
    if w.value.ndim != 3 or x.value.shape[-1] != w.value.shape[-1] \
            or x.value.shape[-2] != w.value.shape[0]:
        raise ShapeMismatch(
            f"jointwise_matvec: weight {w.value.shape} vs input {x.value.shape}")
    nj, no_, ni = w.value.shape
    lead = x.value.shape[:-2]
    xj = x.value.reshape(-1, nj, ni).transpose(1, 0, 2)       # (J, N, I)
    out = (xj @ w.value.transpose(0, 2, 1)).transpose(1, 0, 2)  # (N, J, O)
    out = out.reshape(lead + (nj, no_))

    def vjp(g):
        gw = gx = None
        gj = g.reshape(-1, nj, no_).transpose(1, 0, 2)        # (J, N, O)
        if w._needs:
            gw = gj.transpose(0, 2, 1) @ xj                    # (J, O, I)
        if x._needs:
            gx = (gj @ w.value).transpose(1, 0, 2).reshape(x.value.shape)
        return gw, gx

    return Tensor(out, (w, x), vjp)


def _axis_tuple(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    axes = _axis_tuple(axis, a.value.ndim)
    out = a.value.sum(axis=axes, keepdims=keepdims)

    def vjp(g):
        gk = g
        if not keepdims:
            for ax in sorted(axes):
                gk = np.expand_dims(gk, ax)
        return (np.broadcast_to(gk, a.value.shape),)

    return Tensor(out, (a,), vjp)


def tmean(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    axes = _axis_tuple(axis, a.value.ndim)
    count = 1
    for ax in axes:
        count *= a.value.shape[ax]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    src = a.value.shape
    return Tensor(a.value.reshape(shape), (a,), lambda g: (g.reshape(src),))


def transpose(a, axes) -> Tensor:
    a = as_tensor(a)
    inverse = tuple(np.argsort(axes))
    return Tensor(a.value.transpose(axes), (a,),
                  lambda g: (g.transpose(inverse),))


def getitem(a, idx) -> Tensor:
    """Basic indexing (ints and slices) with scatter-add backward."""
    a = as_tensor(a)

    def vjp(g):
        z = np.zeros_like(a.value)
        z[idx] = g
        return (z,)

    return Tensor(a.value[idx], (a,), vjp)


def concat(tensors, axis=-1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.value.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor(np.concatenate([t.value for t in tensors], axis=axis),
                  tuple(tensors), vjp)


def stack(tensors, axis=0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]

    def vjp(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return Tensor(np.stack([t.value for t in tensors], axis=axis),
                  tuple(tensors), vjp)


def cross(a, b) -> Tensor:
    """Cross product along the last axis (size 3)."""
    a, b = as_tensor(a), as_tensor(b)

    def vjp(g):
        return (
            np.cross(b.value, g) if a._needs else None,
            np.cross(g, a.value) if b._needs else None,
        )

    return Tensor(np.cross(a.value, b.value), (a, b), vjp)


def vnorm(a, axis=-1, keepdims=False) -> Tensor:
    """Euclidean norm along one axis; zero vectors get zero gradient."""
    a = as_tensor(a)
    nk = np.sqrt(np.sum(a.value * a.value, axis=axis, keepdims=True))
    out = nk if keepdims else np.squeeze(nk, axis=axis)

    def vjp(g):
        gk = g if keepdims else np.expand_dims(g, axis)
        safe = np.where(nk == 0.0, 1.0, nk)
        direction = np.where(nk == 0.0, 0.0, a.value / safe)
        return (gk * direction,)

    return Tensor(out, (a,), vjp)


def softmax(a, axis=-1) -> Tensor:
    a = as_tensor(a)
    shifted = a.value - a.value.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        return ((g - inner) * out,)

    return Tensor(out, (a,), vjp)
