"""Dense 2-D float64 tensors with reverse-mode gradient accumulation.

Every value in the library is a row-major matrix: vectors are 1xN rows,
scalars are 1x1. Operations record a tape of vector-Jacobian closures;
``backward`` walks the tape in reverse topological order and accumulates
gradients additively into every participating node.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np


class DimensionError(ValueError):
    """Raised when operand shapes do not conform."""


_GRAD_ENABLED = True


class no_grad:
    """Context manager that suspends tape construction (rollout forwards)."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


def _as_matrix(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise DimensionError(f"tensors are 2-D matrices, got ndim={arr.ndim}")
    return arr


class Tensor:
    """A 2-D array node in the computation graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _as_matrix(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._vjp: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError(f"item() needs a scalar, got shape {self.shape}")
        return float(self.data[0, 0])

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        else:
            self.grad.fill(0.0)

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g)  # own the buffer; g may be shared or a view
        else:
            self.grad += g

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # arithmetic sugar; constants are wrapped on the fly
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


class Parameter(Tensor):
    """A trainable leaf: value + persistent grad + optimizer accumulator."""

    __slots__ = ("step_state",)

    def __init__(self, data):
        super().__init__(data, requires_grad=True)
        self.grad = np.zeros_like(self.data)
        self.step_state = np.zeros_like(self.data)

    def __repr__(self) -> str:
        return f"Parameter(shape={self.shape})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: Sequence[Tensor], vjp) -> Tensor:
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if g.shape == shape:
        return g
    if shape[0] == 1 and g.shape[0] > 1:
        g = g.sum(axis=0, keepdims=True)
    if shape[1] == 1 and g.shape[1] > 1:
        g = g.sum(axis=1, keepdims=True)
    if g.shape != shape:
        raise DimensionError(f"cannot reduce gradient {g.shape} to {shape}")
    return g


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data + b.data

    def vjp(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.shape))

    return _make(out_data, (a, b), vjp)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data - b.data

    def vjp(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g, b.shape))

    return _make(out_data, (a, b), vjp)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data * b.data

    def vjp(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return _make(out_data, (a, b), vjp)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data / b.data

    def vjp(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g / b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return _make(out_data, (a, b), vjp)


def neg(a) -> Tensor:
    a = as_tensor(a)

    def vjp(g):
        if a.requires_grad:
            a._accumulate(-g)

    return _make(-a.data, (a,), vjp)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: {a.shape} @ {b.shape} do not conform")
    out_data = a.data @ b.data

    def vjp(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return _make(out_data, (a, b), vjp)


def transpose(a) -> Tensor:
    a = as_tensor(a)

    def vjp(g):
        if a.requires_grad:
            a._accumulate(g.T)

    return _make(a.data.T.copy(), (a,), vjp)


def matmul_t(a, b) -> Tensor:
    """a @ b.T without materializing a transposed node (affine-layer hot path)."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"matmul_t: {a.shape} @ {b.shape}.T do not conform")
    out_data = a.data @ b.data.T

    def vjp(g):
        if a.requires_grad:
            a._accumulate(g @ b.data)
        if b.requires_grad:
            b._accumulate(g.T @ a.data)

    return _make(out_data, (a, b), vjp)


def tsum(a, axis: int | None = None) -> Tensor:
    """Sum all entries (scalar) or along one axis (kept as a 2-D row/column)."""
    a = as_tensor(a)
    if axis is None:
        out_data = a.data.sum().reshape(1, 1)
    else:
        out_data = a.data.sum(axis=axis, keepdims=True)

    def vjp(g):
        if a.requires_grad:
            a._accumulate(np.broadcast_to(g, a.shape) if g.shape != a.shape else g)

    return _make(out_data, (a,), vjp)


def exp(a) -> Tensor:
    a = as_tensor(a)
    out_data = np.exp(a.data)

    def vjp(g):
        if a.requires_grad:
            a._accumulate(g * out_data)

    return _make(out_data, (a,), vjp)


def log(a) -> Tensor:
    a = as_tensor(a)

    def vjp(g):
        if a.requires_grad:
            a._accumulate(g / a.data)

    return _make(np.log(a.data), (a,), vjp)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out_data = np.tanh(a.data)

    def vjp(g):
        if a.requires_grad:
            a._accumulate(g * (1.0 - out_data * out_data))

    return _make(out_data, (a,), vjp)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out_data = 1.0 / (1.0 + np.exp(-a.data))

    def vjp(g):
        if a.requires_grad:
            a._accumulate(g * out_data * (1.0 - out_data))

    return _make(out_data, (a,), vjp)


def relu(a) -> Tensor:
    a = as_tensor(a)
    out_data = np.maximum(a.data, 0.0)

    def vjp(g):
        if a.requires_grad:
            a._accumulate(g * (a.data > 0.0))

    return _make(out_data, (a,), vjp)


def square(a) -> Tensor:
    a = as_tensor(a)

    def vjp(g):
        if a.requires_grad:
            a._accumulate(g * 2.0 * a.data)

    return _make(a.data * a.data, (a,), vjp)


def concat(parts: Iterable[Tensor], axis: int = 1) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    if not parts:
        raise DimensionError("concat needs at least one tensor")
    out_data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if p.requires_grad:
                p._accumulate(g[lo:hi, :] if axis == 0 else g[:, lo:hi])

    return _make(out_data, parts, vjp)


def rows(a, start: int, stop: int) -> Tensor:
    """Contiguous row slice [start, stop)."""
    a = as_tensor(a)
    out_data = a.data[start:stop, :].copy()

    def vjp(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[start:stop, :] = g
            a._accumulate(full)

    return _make(out_data, (a,), vjp)


def reshape(a, shape: tuple[int, int]) -> Tensor:
    a = as_tensor(a)
    if shape[0] * shape[1] != a.data.size:
        raise DimensionError(f"cannot reshape {a.shape} to {shape}")
    out_data = a.data.reshape(shape).copy()

    def vjp(g):
        if a.requires_grad:
            a._accumulate(g.reshape(a.shape))

    return _make(out_data, (a,), vjp)


def take_rows(a, indices) -> Tensor:
    """Gather rows by an integer index array (duplicates allowed)."""
    a = as_tensor(a)
    idx = np.asarray(indices, dtype=np.intp)
    out_data = a.data[idx, :].copy()

    def vjp(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            np.add.at(full, idx, g)
            a._accumulate(full)

    return _make(out_data, (a,), vjp)


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(node) into .grad for every node reaching loss.

    Parameters keep their gradients across calls (additive accumulation)
    until an optimizer step zeroes them.
    """
    if loss.data.size != 1:
        raise DimensionError(f"backward expects a scalar loss, got shape {loss.shape}")

    # iterative topological order (graphs are deep: recurrent unrolls)
    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))

    loss._accumulate(np.ones_like(loss.data))
    for node in reversed(topo):
        if node._vjp is not None:
            node._vjp(node.grad)
            # intermediate buffers are one-shot; free them eagerly
            if not isinstance(node, Parameter):
                node.grad = None
                node._parents = ()
                node._vjp = None


def check_finite(t: Tensor, op_name: str) -> Tensor:
    if not np.all(np.isfinite(t.data)):
        raise FloatingPointError(f"{op_name} produced non-finite values")
    return t
