"""A small reverse-mode tape over numpy arrays.

Every operation below accepts plain arrays as well as :class:`Node`
objects. With plain arrays nothing is recorded, which lets prediction
and training share one forward code path. Gradients are accumulated in
a fixed topological order, so a backward pass is bitwise reproducible.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Node", "variable", "value_of", "grad", "tanh", "sin", "cos", "matmul",
    "sum", "mean", "square", "reshape", "transpose", "take",
]


class Node:
    __slots__ = ("value", "parents", "grad")
    __array_priority__ = 100.0

    def __init__(self, value, parents=()):
        self.value = np.asarray(value, dtype=float)
        # sequence of (parent node, vjp: upstream grad -> parent grad)
        self.parents = parents
        self.grad = None

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __repr__(self):
        return f"Node(shape={self.value.shape})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(other))

    def __rsub__(self, other):
        return add(other, neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Node):
            raise TypeError("division by a Node is not supported")
        return mul(self, 1.0 / np.asarray(other, dtype=float))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, idx):
        return getitem(self, idx)

    @property
    def T(self):
        return transpose(self)


def variable(value) -> Node:
    """A leaf node whose gradient will be collected."""
    return Node(np.array(value, dtype=float))


def value_of(x):
    return x.value if isinstance(x, Node) else x


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, size in enumerate(shape):
        if size == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _lift(value, *pairs):
    live = tuple((p, f) for p, f in pairs if isinstance(p, Node))
    if not live:
        return value
    return Node(value, live)


def add(a, b):
    va, vb = value_of(a), value_of(b)
    out = va + vb
    sa, sb = np.shape(va), np.shape(vb)
    return _lift(out, (a, lambda g: _unbroadcast(g, sa)), (b, lambda g: _unbroadcast(g, sb)))


def neg(a):
    if not isinstance(a, Node):
        return -a
    return Node(-a.value, ((a, lambda g: -g),))


def mul(a, b):
    va, vb = value_of(a), value_of(b)
    out = va * vb
    sa, sb = np.shape(va), np.shape(vb)
    return _lift(out, (a, lambda g: _unbroadcast(g * vb, sa)),
                 (b, lambda g: _unbroadcast(g * va, sb)))


def square(a):
    va = value_of(a)
    return _lift(va * va, (a, lambda g: 2.0 * g * va))


def tanh(a):
    va = value_of(a)
    t = np.tanh(va)
    return _lift(t, (a, lambda g: g * (1.0 - t * t)))


def sin(a):
    va = value_of(a)
    return _lift(np.sin(va), (a, lambda g: g * np.cos(va)))


def cos(a):
    va = value_of(a)
    return _lift(np.cos(va), (a, lambda g: -g * np.sin(va)))


def matmul(a, b):
    """``a @ b`` with ``b`` two-dimensional; ``a`` may carry batch axes."""
    va, vb = value_of(a), value_of(b)
    if vb.ndim != 2:
        raise ValueError("right operand of matmul must be 2-D")
    out = va @ vb

    def grad_b(g):
        return va.reshape(-1, va.shape[-1]).T @ g.reshape(-1, g.shape[-1])

    return _lift(out, (a, lambda g: g @ vb.T), (b, grad_b))


def sum(a, axis=None):  # noqa: A001 - mirrors numpy naming
    va = value_of(a)
    out = va.sum(axis=axis)
    shape = va.shape

    def back(g):
        if axis is None:
            return np.broadcast_to(g, shape).copy()
        return np.broadcast_to(np.expand_dims(g, axis), shape).copy()

    return _lift(out, (a, back))


def mean(a, axis=None):
    va = value_of(a)
    count = va.size if axis is None else va.shape[axis]
    return mul(sum(a, axis), 1.0 / count)


def reshape(a, shape):
    va = value_of(a)
    old = va.shape
    return _lift(va.reshape(shape), (a, lambda g: g.reshape(old)))


def transpose(a, axes=None):
    va = value_of(a)
    out = np.transpose(va, axes)
    inv = None if axes is None else np.argsort(axes)
    return _lift(out, (a, lambda g: np.transpose(g, inv)))


def take(a, index):
    """Gather along axis 0 with an integer index array of any shape."""
    va = value_of(a)
    index = np.asarray(index)
    out = va[index]

    def back(g):
        acc = np.zeros_like(va)
        np.add.at(acc, index, g)
        return acc

    return _lift(out, (a, back))


def getitem(a, idx):
    va = value_of(a)

    def back(g):
        acc = np.zeros_like(va)
        acc[idx] += g
        return acc

    return _lift(va[idx], (a, back))


def _toposort(root: Node):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(root: Node) -> None:
    """Accumulate ``d root / d node`` into ``node.grad`` for every ancestor."""
    if root.value.size != 1:
        raise ValueError("backward() needs a scalar output")
    order = _toposort(root)
    for node in order:
        node.grad = None
    root.grad = np.ones_like(root.value)
    for node in reversed(order):
        g = node.grad
        if g is None:
            continue
        for parent, vjp in node.parents:
            contrib = vjp(g)
            if parent.grad is None:
                parent.grad = np.array(contrib, dtype=float)
            else:
                parent.grad = parent.grad + contrib
        if node.parents:
            # free intermediate buffers; leaves keep their gradient
            node.grad = None


def grad(fn, x):
    """Return ``(fn(x), d fn / d x)`` for a scalar-valued ``fn``."""
    leaf = variable(x)
    out = fn(leaf)
    if not isinstance(out, Node):
        return float(out), np.zeros_like(leaf.value)
    backward(out)
    g = leaf.grad if leaf.grad is not None else np.zeros_like(leaf.value)
    return float(out.value), g
