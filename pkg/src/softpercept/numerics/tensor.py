"""Dense tensors with a reverse-mode tape.

Every differentiable op builds a new :class:`Tensor` holding its forward
value, references to its parents and a closure that pushes the output
adjoint back to them.  :func:`backward` walks the recorded graph once in
reverse topological order.
"""

from __future__ import annotations

import contextlib
import threading
from typing import Callable, Iterable, Sequence

import numpy as np

_state = threading.local()


def default_dtype() -> np.dtype:
    return getattr(_state, "dtype", np.dtype(np.float32))


def grad_enabled() -> bool:
    return getattr(_state, "grad", True)


@contextlib.contextmanager
def precision(dtype):
    """Temporarily change the dtype new tensors are created with.

    float32 is the working precision; float64 is used by the gradient
    checkers so finite differences are not swamped by rounding.
    """
    old = default_dtype()
    _state.dtype = np.dtype(dtype)
    try:
        yield
    finally:
        _state.dtype = old


@contextlib.contextmanager
def no_grad():
    old = grad_enabled()
    _state.grad = False
    try:
        yield
    finally:
        _state.grad = old


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "op", "parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.asarray(data)
        if arr.dtype != default_dtype():
            arr = arr.astype(default_dtype())
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.op = "leaf"
        self.parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, op={self.op})"

    def zero_grad(self):
        self.grad = None

    # operator sugar; all of these route through the primitive ops below
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return multiply(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return slice_(self, index)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def sum(self, axis=None):
        return sum_(self, axis)

    def mean(self, axis=None):
        return mean(self, axis)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(value: np.ndarray, op: str, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = value
    out.grad = None
    out.name = None
    out.op = op
    needs = grad_enabled() and any(p.requires_grad for p in parents)
    out.requires_grad = needs
    if needs:
        out.parents = tuple(parents)
        out._backward = backward
    else:
        out.parents = ()
        out._backward = None
    return out


def _accumulate(t: Tensor, g: np.ndarray):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=t.data.dtype, copy=True)
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


# ----------------------------------------------------------------------------
# elementwise


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(g, b.shape))

    return _make(a.data + b.data, "add", (a, b), backward)


def neg(a: Tensor) -> Tensor:
    def backward(g):
        _accumulate(a, -g)

    return _make(-a.data, "neg", (a,), backward)


def multiply(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("multiply", a, b)

    def backward(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g * a.data, b.shape))

    return _make(a.data * b.data, "multiply", (a, b), backward)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def backward(g):
        _accumulate(a, g * mask)

    return _make(np.where(mask, a.data, 0).astype(a.data.dtype), "relu", (a,), backward)


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)

    def backward(g):
        _accumulate(a, g * (1 - y * y))

    return _make(y, "tanh", (a,), backward)


def softplus(a: Tensor) -> Tensor:
    x = a.data
    # log(1 + e^x) without overflow
    y = np.maximum(x, 0) + np.log1p(np.exp(-np.abs(x)))

    def backward(g):
        sig = 0.5 * (1 + np.tanh(0.5 * x))
        _accumulate(a, g * sig)

    return _make(y.astype(x.dtype), "softplus", (a,), backward)


def exp(a: Tensor) -> Tensor:
    y = np.exp(a.data)

    def backward(g):
        _accumulate(a, g * y)

    return _make(y, "exp", (a,), backward)


def log(a: Tensor) -> Tensor:
    def backward(g):
        _accumulate(a, g / a.data)

    return _make(np.log(a.data), "log", (a,), backward)


def squared_error(pred, target) -> Tensor:
    """Elementwise ``(pred - target)**2``; shapes must match exactly."""
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"squared_error: shapes {pred.shape} and {target.shape} differ")
    diff = pred.data - target.data

    def backward(g):
        if pred.requires_grad:
            _accumulate(pred, 2 * g * diff)
        if target.requires_grad:
            _accumulate(target, -2 * g * diff)

    return _make(diff * diff, "squared_error", (pred, target), backward)


# ----------------------------------------------------------------------------
# reductions and linear algebra


def _norm_axis(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def sum_(a: Tensor, axis=None) -> Tensor:
    axes = _norm_axis(axis, a.ndim)
    value = a.data.sum(axis=axes)

    def backward(g):
        _accumulate(a, np.broadcast_to(np.expand_dims(g, axes), a.shape))

    return _make(np.asarray(value, dtype=a.data.dtype), "sum", (a,), backward)


def mean(a: Tensor, axis=None) -> Tensor:
    axes = _norm_axis(axis, a.ndim)
    count = 1
    for ax in axes:
        count *= a.shape[ax]
    value = a.data.sum(axis=axes) / count

    def backward(g):
        _accumulate(a, np.broadcast_to(np.expand_dims(g, axes), a.shape) / count)

    return _make(np.asarray(value, dtype=a.data.dtype), "mean", (a,), backward)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")

    def backward(g):
        if a.requires_grad:
            _accumulate(a, g @ b.data.T)
        if b.requires_grad:
            _accumulate(b, a.data.T @ g)

    return _make(a.data @ b.data, "matmul", (a, b), backward)


# ----------------------------------------------------------------------------
# structural


def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    try:
        value = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view {a.shape} as {shape}") from None

    def backward(g):
        _accumulate(a, g.reshape(a.shape))

    return _make(value, "reshape", (a,), backward)


def concat(tensors: Iterable[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat: no inputs")
    ndim = tensors[0].ndim
    ax = axis % ndim
    for t in tensors[1:]:
        if t.ndim != ndim or any(
            t.shape[i] != tensors[0].shape[i] for i in range(ndim) if i != ax
        ):
            raise ShapeError(f"concat: incompatible shapes {tensors[0].shape} and {t.shape}")
    sizes = [t.shape[ax] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                idx = [slice(None)] * ndim
                idx[ax] = slice(lo, hi)
                _accumulate(t, g[tuple(idx)])

    value = np.concatenate([t.data for t in tensors], axis=ax)
    return _make(value, "concat", tensors, backward)


def slice_(a: Tensor, index) -> Tensor:
    """Basic (non-fancy) indexing."""
    if not isinstance(index, tuple):
        index = (index,)
    for item in index:
        if not (isinstance(item, (int, slice)) or item is Ellipsis):
            raise TypeError(f"slice: unsupported index {item!r}")
    try:
        value = a.data[index]
    except IndexError as exc:
        raise ShapeError(f"slice: {exc} for shape {a.shape}") from None

    def backward(g):
        full = np.zeros_like(a.data)
        full[index] = g
        _accumulate(a, full)

    return _make(np.array(value), "slice", (a,), backward)


# ----------------------------------------------------------------------------
# reverse sweep


def _topological(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
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


def backward(root: Tensor) -> dict[int, np.ndarray]:
    """Accumulate d(root)/d(leaf) into every leaf's ``.grad``.

    Returns a map from ``id(leaf)`` to its gradient for leaves that
    require gradients.  Leaf ``.grad`` fields accumulate across calls;
    reset them with ``zero_grad`` between steps.
    """
    if root.data.size != 1:
        raise ShapeError(f"backward: root must be scalar, got shape {root.shape}")
    if not root.requires_grad:
        return {}
    order = _topological(root)
    # intermediate adjoints live only for this sweep
    for node in order:
        if node.parents:
            node.grad = None
    root.grad = np.ones_like(root.data)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
    grads = {}
    for node in order:
        if not node.parents and node.requires_grad and node.grad is not None:
            grads[id(node)] = node.grad
    for node in order:
        if node.parents:
            node.grad = None
    return grads
