"""Reverse-mode differentiation over a small, fixed set of array primitives.

Only the operations needed for dense networks, Gaussian log-densities and
the clipped-surrogate / value losses are supported. Every primitive records
a closure mapping the upstream gradient to the gradients of its inputs.
"""

from __future__ import annotations

import numpy as np

from throwcatch.errors import DimensionError


class Var:
    """A node in the computation graph holding a float64 array."""

    __slots__ = ("value", "grad", "parents", "backward_fn")

    def __init__(self, value, parents=(), backward_fn=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn

    @property
    def shape(self):
        return self.value.shape

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

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Var(shape={self.value.shape})"


def as_var(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def add(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    sa, sb = a.shape, b.shape
    return Var(a.value + b.value, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    sa, sb = a.shape, b.shape
    return Var(a.value - b.value, (a, b), lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb)))


def mul(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    av, bv = a.value, b.value
    return Var(av * bv, (a, b), lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))


def neg(a) -> Var:
    a = as_var(a)
    return Var(-a.value, (a,), lambda g: (-g,))


def matmul(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    if a.value.ndim != 2 or b.value.ndim != 2:
        raise DimensionError("matmul expects 2-D operands")
    av, bv = a.value, b.value
    return Var(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))


def transpose(a) -> Var:
    a = as_var(a)
    return Var(a.value.T, (a,), lambda g: (g.T,))


def exp(a) -> Var:
    a = as_var(a)
    out = np.exp(a.value)
    return Var(out, (a,), lambda g: (g * out,))


def elu(a) -> Var:
    a = as_var(a)
    x = a.value
    neg_part = np.expm1(np.minimum(x, 0.0))
    out = np.where(x >= 0.0, x, neg_part)
    slope = np.where(x >= 0.0, 1.0, neg_part + 1.0)
    return Var(out, (a,), lambda g: (g * slope,))


def square(a) -> Var:
    a = as_var(a)
    x = a.value
    return Var(x * x, (a,), lambda g: (2.0 * x * g,))


def sum(a, axis=None) -> Var:  # noqa: A001
    a = as_var(a)
    shape = a.shape
    out = a.value.sum(axis=axis)

    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return Var(out, (a,), backward)


def mean(a) -> Var:
    a = as_var(a)
    n = a.value.size
    return mul(sum(a), 1.0 / n)


def minimum(a, b) -> Var:
    """Elementwise min; on ties the gradient goes to ``a``."""
    a, b = as_var(a), as_var(b)
    take_a = a.value <= b.value
    return Var(
        np.where(take_a, a.value, b.value),
        (a, b),
        lambda g: (_unbroadcast(g * take_a, a.shape), _unbroadcast(g * ~take_a, b.shape)),
    )


def clip(a, lo: float, hi: float) -> Var:
    a = as_var(a)
    x = a.value
    inside = (x >= lo) & (x <= hi)
    return Var(np.clip(x, lo, hi), (a,), lambda g: (g * inside,))


def concat(parts, axis: int = -1) -> Var:
    parts = [as_var(p) for p in parts]
    sizes = [p.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]
    return Var(
        np.concatenate([p.value for p in parts], axis=axis),
        tuple(parts),
        lambda g: tuple(np.split(g, splits, axis=axis)),
    )


def take(flat, start: int, stop: int, shape) -> Var:
    """A reshaped slice of a flat 1-D vector (used to carve layers out of a parameter vector)."""
    flat = as_var(flat)
    n = flat.value.size

    def backward(g):
        full = np.zeros(n)
        full[start:stop] = g.ravel()
        return (full,)

    return Var(flat.value[start:stop].reshape(shape), (flat,), backward)


def _topological_order(root: Var) -> list[Var]:
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
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Var) -> None:
    """Populate ``.grad`` on every node reachable from the scalar ``loss``."""
    if loss.value.size != 1:
        raise DimensionError(f"backward needs a scalar loss, got shape {loss.value.shape}")
    order = _topological_order(loss)
    for node in order:
        node.grad = None
    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node.backward_fn is None or node.grad is None:
            continue
        for parent, g in zip(node.parents, node.backward_fn(node.grad)):
            parent.grad = g if parent.grad is None else parent.grad + g


def grad(loss: Var, wrt: Var) -> np.ndarray:
    """Gradient of a scalar ``loss`` with respect to the leaf ``wrt``."""
    backward(loss)
    if wrt.grad is None:
        return np.zeros_like(wrt.value)
    return np.asarray(wrt.grad, dtype=np.float64).reshape(wrt.value.shape)
