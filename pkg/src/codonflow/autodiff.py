"""Small tape-based reverse-mode differentiation over numpy arrays.

Forward calls record parents and a backward closure on each node; calling
``backward`` on a scalar root walks the tape once in reverse topological
order and accumulates gradients into every leaf created with
``requires_grad=True``. The op set is exactly what the policy network and
the balance losses need; everything runs in float64 so gradients can be
checked against central finite differences at tight tolerance.
"""

from __future__ import annotations

import numpy as np

from .exceptions import GraphConsumedError, InvariantViolationError


def _as_array(value) -> np.ndarray:
    return np.asarray(value, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """One node of the recorded computation."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        self.data = _as_array(data)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out_data = self.data + other.data

        def back(g):
            return _unbroadcast(g, self.data.shape), _unbroadcast(g, other.data.shape)

        return Tensor(out_data, _parents=(self, other), _backward=back)

    __radd__ = __add__

    def __neg__(self):
        return Tensor(-self.data, _parents=(self,), _backward=lambda g: (-g,))

    def __sub__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        return self + (-other)

    def __rsub__(self, other):
        return Tensor(other) + (-self)

    def __mul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out_data = self.data * other.data
        a, b = self, other

        def back(g):
            return (
                _unbroadcast(g * b.data, a.data.shape),
                _unbroadcast(g * a.data, b.data.shape),
            )

        return Tensor(out_data, _parents=(a, b), _backward=back)

    __rmul__ = __mul__

    def __matmul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        a, b = self, other
        out = a.data @ b.data

        def back(g):
            return g @ b.data.T, a.data.T @ g

        return Tensor(out, _parents=(a, b), _backward=back)

    def __getitem__(self, key):
        out = self.data[key]
        src = self

        def back(g):
            full = np.zeros_like(src.data)
            np.add.at(full, key, g)
            return (full,)

        return Tensor(out, _parents=(src,), _backward=back)

    # -- shape ops ----------------------------------------------------------

    def reshape(self, *shape):
        src = self
        out = self.data.reshape(*shape)

        def back(g):
            return (g.reshape(src.data.shape),)

        return Tensor(out, _parents=(src,), _backward=back)

    def sum(self, axis=None):
        src = self
        out = self.data.sum(axis=axis)

        def back(g):
            if axis is None:
                return (np.broadcast_to(g, src.data.shape).copy(),)
            g_exp = np.expand_dims(g, axis)
            return (np.broadcast_to(g_exp, src.data.shape).copy(),)

        return Tensor(out, _parents=(src,), _backward=back)

    def mean(self):
        n = self.data.size
        return self.sum() * (1.0 / n)

    def square(self):
        return self * self

    # -- nonlinearities ------------------------------------------------------

    def tanh(self):
        out = np.tanh(self.data)
        src = self

        def back(g):
            return (g * (1.0 - out * out),)

        return Tensor(out, _parents=(src,), _backward=back)

    # -- autodiff driver -----------------------------------------------------

    def backward(self):
        """Accumulate gradients of this scalar into all requires_grad leaves."""
        if self.data.size != 1:
            raise InvariantViolationError("backward needs a scalar loss")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                if node.requires_grad:
                    node.grad = g if node.grad is None else node.grad + g
                continue
            if node._backward == "consumed":
                raise GraphConsumedError("backward already ran through this graph")
            parent_grads = node._backward(g)
            node._backward = "consumed"
            for parent, pg in zip(node._parents, parent_grads):
                if not parent.requires_grad or pg is None:
                    continue
                pg = np.asarray(pg)
                if id(parent) in grads:
                    grads[id(parent)] = grads[id(parent)] + pg
                else:
                    grads[id(parent)] = pg.copy() if pg.base is not None else pg


def constant(value) -> Tensor:
    return Tensor(value)


def parameter(value) -> Tensor:
    return Tensor(np.array(value, dtype=np.float64), requires_grad=True)


def log_softmax(x: Tensor) -> Tensor:
    """Row-wise log softmax over the last axis with a numerically stable lse."""
    data = x.data
    m = data.max(axis=-1, keepdims=True)
    shifted = data - m
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True)) + m
    out = data - lse
    soft = np.exp(out)
    src = x

    def back(g):
        return (g - soft * g.sum(axis=-1, keepdims=True),)

    return Tensor(out, _parents=(src,), _backward=back)


def gather_rows(x: Tensor, index: np.ndarray) -> Tensor:
    """out[i] = x[i, index[i]] for a 2-D tensor."""
    index = np.asarray(index, dtype=np.int64)
    rows = np.arange(x.data.shape[0])
    out = x.data[rows, index]
    src = x

    def back(g):
        full = np.zeros_like(src.data)
        np.add.at(full, (rows, index), g)
        return (full,)

    return Tensor(out, _parents=(src,), _backward=back)


def take(x: Tensor, index: np.ndarray) -> Tensor:
    """1-D gather with repeats allowed; backward scatter-adds."""
    index = np.asarray(index, dtype=np.int64)
    out = x.data[index]
    src = x

    def back(g):
        full = np.zeros_like(src.data)
        np.add.at(full, index, g)
        return (full,)

    return Tensor(out, _parents=(src,), _backward=back)


def cumsum(x: Tensor) -> Tensor:
    """Inclusive prefix sums of a 1-D tensor."""
    out = np.cumsum(x.data)
    src = x

    def back(g):
        return (np.cumsum(g[::-1])[::-1],)

    return Tensor(out, _parents=(src,), _backward=back)


def concat(parts: list[Tensor]) -> Tensor:
    """Concatenate 1-D tensors."""
    datas = [p.data.reshape(-1) for p in parts]
    sizes = [d.size for d in datas]
    out = np.concatenate(datas)

    def back(g):
        grads = []
        offset = 0
        for p, size in zip(parts, sizes):
            grads.append(g[offset : offset + size].reshape(p.data.shape))
            offset += size
        return tuple(grads)

    return Tensor(out, _parents=tuple(parts), _backward=back)


def stack_scalars(parts: list[Tensor]) -> Tensor:
    """Stack 0-d tensors into a 1-D tensor."""
    return concat([p.reshape(1) for p in parts])
