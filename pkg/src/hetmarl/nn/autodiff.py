"""Reverse-mode automatic differentiation over numpy arrays.

A small tape: every operation builds a ``Tensor`` node holding its value and
a closure that routes the incoming gradient to its parents.  ``backward()``
walks the graph in reverse topological order.  Correctness is defined by the
finite-difference contract exercised in the test suite, not by any property
of the mechanism itself.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "tensor",
    "concat",
    "stack_rows",
    "exp",
    "log",
    "tanh",
    "minimum",
    "maximum",
]


class NumericError(RuntimeError):
    """Raised when a non-finite value appears in a checked computation."""


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce ``grad`` back to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    # sum over leading axes added by broadcasting
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    # sum over axes that were 1 in the original shape
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A node in the recorded computation.

    ``data`` is always a float64 ndarray.  Leaf tensors created with
    ``requires_grad=True`` accumulate gradients in ``grad`` after
    ``backward()``.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, parents=(), backward=None, name=""):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in parents)
        self._parents = tuple(parents)
        self._backward = backward
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    # ------------------------------------------------------------------ ops

    def __add__(self, other):
        other = tensor(other)

        def bwd(g, out):
            return (_unbroadcast(g, self.shape), _unbroadcast(g, other.shape))

        return Tensor(self.data + other.data, parents=(self, other), backward=bwd)

    __radd__ = __add__

    def __neg__(self):
        return Tensor(-self.data, parents=(self,), backward=lambda g, out: (-g,))

    def __sub__(self, other):
        return self + (-tensor(other))

    def __rsub__(self, other):
        return tensor(other) + (-self)

    def __mul__(self, other):
        other = tensor(other)

        def bwd(g, out):
            return (
                _unbroadcast(g * other.data, self.shape),
                _unbroadcast(g * self.data, other.shape),
            )

        return Tensor(self.data * other.data, parents=(self, other), backward=bwd)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = tensor(other)

        def bwd(g, out):
            return (
                _unbroadcast(g / other.data, self.shape),
                _unbroadcast(-g * self.data / other.data**2, other.shape),
            )

        return Tensor(self.data / other.data, parents=(self, other), backward=bwd)

    def __rtruediv__(self, other):
        return tensor(other) / self

    def __pow__(self, p):
        assert isinstance(p, (int, float))

        def bwd(g, out):
            return (g * p * self.data ** (p - 1),)

        return Tensor(self.data**p, parents=(self,), backward=bwd)

    def __matmul__(self, other):
        other = tensor(other)

        def bwd(g, out):
            ga = g @ np.swapaxes(other.data, -1, -2)
            gb = np.swapaxes(self.data, -1, -2) @ g
            return (_unbroadcast(ga, self.shape), _unbroadcast(gb, other.shape))

        return Tensor(self.data @ other.data, parents=(self, other), backward=bwd)

    def __getitem__(self, idx):
        def bwd(g, out):
            full = np.zeros_like(self.data)
            np.add.at(full, idx, g)
            return (full,)

        return Tensor(self.data[idx], parents=(self,), backward=bwd)

    def reshape(self, *shape):
        def bwd(g, out):
            return (g.reshape(self.shape),)

        return Tensor(self.data.reshape(*shape), parents=(self,), backward=bwd)

    def sum(self, axis=None, keepdims=False):
        def bwd(g, out):
            if axis is None:
                return (np.broadcast_to(g, self.shape).copy(),)
            g2 = g if keepdims else np.expand_dims(g, axis)
            return (np.broadcast_to(g2, self.shape).copy(),)

        return Tensor(self.data.sum(axis=axis, keepdims=keepdims),
                      parents=(self,), backward=bwd)

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def clip(self, lo, hi):
        """Clamp values; gradient is zero outside [lo, hi]."""
        mask = (self.data >= lo) & (self.data <= hi)

        def bwd(g, out):
            return (g * mask,)

        return Tensor(np.clip(self.data, lo, hi), parents=(self,), backward=bwd)

    # -------------------------------------------------------------- backward

    def backward(self, check_finite=False):
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None or node._backward is None:
                if node.requires_grad and node._backward is None and g is not None:
                    node.grad = g if node.grad is None else node.grad + g
                continue
            if check_finite and not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient at node {node.name or '<anon>'}")
            for parent, pg in zip(node._parents, node._backward(g, node)):
                if not parent.requires_grad:
                    continue
                acc = grads.get(id(parent))
                grads[id(parent)] = pg if acc is None else acc + pg
            if node.requires_grad and node._parents == ():
                node.grad = g if node.grad is None else node.grad + g


def tensor(x, requires_grad=False) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x, requires_grad=requires_grad)


def exp(x: Tensor) -> Tensor:
    out_data = np.exp(x.data)

    def bwd(g, out):
        return (g * out_data,)

    return Tensor(out_data, parents=(x,), backward=bwd)


def log(x: Tensor) -> Tensor:
    def bwd(g, out):
        return (g / x.data,)

    return Tensor(np.log(x.data), parents=(x,), backward=bwd)


def tanh(x: Tensor) -> Tensor:
    out_data = np.tanh(x.data)

    def bwd(g, out):
        return (g * (1.0 - out_data**2),)

    return Tensor(out_data, parents=(x,), backward=bwd)


def minimum(a: Tensor, b: Tensor) -> Tensor:
    a, b = tensor(a), tensor(b)
    take_a = a.data <= b.data

    def bwd(g, out):
        return (
            _unbroadcast(g * take_a, a.shape),
            _unbroadcast(g * ~take_a, b.shape),
        )

    return Tensor(np.minimum(a.data, b.data), parents=(a, b), backward=bwd)


def maximum(a: Tensor, b: Tensor) -> Tensor:
    a, b = tensor(a), tensor(b)
    take_a = a.data >= b.data

    def bwd(g, out):
        return (
            _unbroadcast(g * take_a, a.shape),
            _unbroadcast(g * ~take_a, b.shape),
        )

    return Tensor(np.maximum(a.data, b.data), parents=(a, b), backward=bwd)


def concat(tensors, axis=-1) -> Tensor:
    tensors = [tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g, out):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor(np.concatenate([t.data for t in tensors], axis=axis),
                  parents=tuple(tensors), backward=bwd)


def stack_rows(tensors) -> Tensor:
    """Stack equally-shaped tensors along a new leading axis."""
    tensors = [tensor(t) for t in tensors]

    def bwd(g, out):
        return tuple(g[i] for i in range(len(tensors)))

    return Tensor(np.stack([t.data for t in tensors]),
                  parents=tuple(tensors), backward=bwd)
