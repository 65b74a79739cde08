"""Dense float64 tensors with a dynamically built reverse-mode trace.

Every model loss in the package is composed from the primitives here.  A
forward pass records, on each produced tensor, its parents and a closure that
maps the output gradient to parent gradients.  ``Tensor.backward`` walks that
record once and then frees it.

Broadcasting follows numpy; gradients are summed back onto the broadcast
operand's shape.
"""
from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

LOG_FLOOR = 1e-12


class ShapeError(ValueError):
    """Operand shapes are incompatible for the requested operation."""


class NumericalError(ArithmeticError):
    """A primitive produced a non-finite value."""


class TraceError(RuntimeError):
    """Misuse of the reverse-mode trace (non-scalar loss, reused trace)."""


def _check_finite(op: str, out: np.ndarray) -> None:
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"{op}: non-finite value in output")


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _broadcast_shape(op: str, a: tuple, b: tuple) -> tuple:
    try:
        return np.broadcast_shapes(a, b)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a} and {b}") from None


class Tensor:
    """A float64 array that can take part in a differentiable computation."""

    __array_priority__ = 100.0

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=np.float64, order="C")
        self.requires_grad = requires_grad
        self.name = name
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None
        self._op: str | None = None
        self._consumed = False

    # -- construction helpers -------------------------------------------------

    @classmethod
    def _from_op(cls, op: str, data: np.ndarray, parents: Sequence["Tensor"], backward) -> "Tensor":
        _check_finite(op, data)
        out = cls.__new__(cls)
        out.data = data
        out.name = None
        out.grad = None
        out._op = op
        out._consumed = False
        out.requires_grad = any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    # -- array-like surface ---------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    # -- reverse pass ---------------------------------------------------------

    def backward(self) -> dict["Tensor", np.ndarray]:
        """Differentiate this scalar with respect to every reachable leaf.

        Leaf gradients are accumulated into ``.grad`` and also returned as a
        map from leaf tensor to this pass's gradient.  The trace is released
        afterwards, so a second call on the same loss raises ``TraceError``.
        """
        if self.data.size != 1:
            raise TraceError(f"backward needs a scalar loss, got shape {self.shape}")
        if self._consumed:
            raise TraceError("trace already consumed by an earlier backward(); rebuild the forward pass")
        if not self.requires_grad:
            return {}

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
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
                if id(p) not in seen and p.requires_grad:
                    stack.append((p, False))

        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        result: dict[Tensor, np.ndarray] = {}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if not node._parents:
                if node._consumed:
                    raise TraceError("loss reuses an intermediate whose trace was already consumed")
                result[node] = g
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            parent_grads = node._backward(g)
            for p, pg in zip(node._parents, parent_grads):
                if pg is None or not p.requires_grad:
                    continue
                if not np.all(np.isfinite(pg)):
                    raise NumericalError(f"{node._op}: non-finite gradient in backward")
                if id(p) in grads:
                    grads[id(p)] = grads[id(p)] + pg
                else:
                    grads[id(p)] = pg

        for node in order:
            if node._parents:
                node._parents = ()
                node._backward = None
                node._consumed = True
        self._consumed = True
        return result

    # -- operators ------------------------------------------------------------

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

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, idx):
        return take(self, idx)

    def sum(self, axis=None, keepdims: bool = False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes or None)

    @property
    def T(self):
        return transpose(self, None)


def tensor(x) -> Tensor:
    """Wrap ``x`` as a constant tensor unless it already is one."""
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data, name: str | None = None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


# -- elementwise binary ---------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = tensor(a), tensor(b)
    _broadcast_shape("add", a.shape, b.shape)
    sa, sb = a.shape, b.shape
    return Tensor._from_op("add", a.data + b.data, (a, b),
                           lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = tensor(a), tensor(b)
    _broadcast_shape("sub", a.shape, b.shape)
    sa, sb = a.shape, b.shape
    return Tensor._from_op("sub", a.data - b.data, (a, b),
                           lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Tensor:
    """Hadamard product."""
    a, b = tensor(a), tensor(b)
    _broadcast_shape("mul", a.shape, b.shape)
    ad, bd = a.data, b.data
    return Tensor._from_op("mul", ad * bd, (a, b),
                           lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)))


hadamard = mul


def div(a, b) -> Tensor:
    a, b = tensor(a), tensor(b)
    _broadcast_shape("div", a.shape, b.shape)
    ad, bd = a.data, b.data
    if np.any(bd == 0):
        raise NumericalError("div: division by zero")
    out = ad / bd
    return Tensor._from_op("div", out, (a, b),
                           lambda g: (_unbroadcast(g / bd, ad.shape),
                                      _unbroadcast(-g * ad / (bd * bd), bd.shape)))


def neg(a) -> Tensor:
    a = tensor(a)
    return Tensor._from_op("neg", -a.data, (a,), lambda g: (-g,))


def power(a, p: float) -> Tensor:
    a = tensor(a)
    ad = a.data
    with np.errstate(all="ignore"):
        out = ad ** p
    return Tensor._from_op(f"pow{p}", out, (a,), lambda g: (g * p * ad ** (p - 1),))


def square(a) -> Tensor:
    a = tensor(a)
    ad = a.data
    return Tensor._from_op("square", ad * ad, (a,), lambda g: (2.0 * g * ad,))


# -- elementwise unary ----------------------------------------------------------

def _sigmoid(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(a) -> Tensor:
    a = tensor(a)
    s = _sigmoid(a.data)
    return Tensor._from_op("sigmoid", s, (a,), lambda g: (g * s * (1.0 - s),))


def tanh(a) -> Tensor:
    a = tensor(a)
    t = np.tanh(a.data)
    return Tensor._from_op("tanh", t, (a,), lambda g: (g * (1.0 - t * t),))


def relu(a) -> Tensor:
    a = tensor(a)
    mask = a.data > 0
    return Tensor._from_op("relu", np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def elu(a) -> Tensor:
    a = tensor(a)
    x = a.data
    neg_part = np.expm1(np.minimum(x, 0.0))
    out = np.where(x > 0, x, neg_part)
    deriv = np.where(x > 0, 1.0, neg_part + 1.0)
    return Tensor._from_op("elu", out, (a,), lambda g: (g * deriv,))


def softplus(a) -> Tensor:
    """log(1 + exp(x)) in the overflow-free form."""
    a = tensor(a)
    x = a.data
    out = np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)
    s = _sigmoid(x)
    return Tensor._from_op("softplus", out, (a,), lambda g: (g * s,))


def exp(a) -> Tensor:
    a = tensor(a)
    with np.errstate(over="ignore"):
        e = np.exp(a.data)
    return Tensor._from_op("exp", e, (a,), lambda g: (g * e,))


def log(a) -> Tensor:
    """Natural log with the argument clamped to at least ``LOG_FLOOR``."""
    a = tensor(a)
    x = a.data
    live = x >= LOG_FLOOR
    xc = np.where(live, x, LOG_FLOOR)
    return Tensor._from_op("log", np.log(xc), (a,), lambda g: (np.where(live, g / xc, 0.0),))


def sqrt(a) -> Tensor:
    a = tensor(a)
    if np.any(a.data < 0):
        raise NumericalError("sqrt: negative input")
    r = np.sqrt(a.data)
    return Tensor._from_op("sqrt", r, (a,), lambda g: (0.5 * g / r,))


# -- reductions and shape -------------------------------------------------------

def _norm_axes(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = tensor(a)
    shape = a.shape
    axes = _norm_axes(axis, a.ndim)

    def back(g):
        if not keepdims:
            g = np.expand_dims(g, axes) if axes else g
        return (np.broadcast_to(g, shape).copy(),)

    return Tensor._from_op("sum", np.sum(a.data, axis=axes, keepdims=keepdims), (a,), back)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = tensor(a)
    axes = _norm_axes(axis, a.ndim)
    count = int(np.prod([a.shape[i] for i in axes])) if axes else 1
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / max(count, 1))


def sqnorm(a) -> Tensor:
    """Squared Frobenius norm, summed over every entry."""
    a = tensor(a)
    ad = a.data
    return Tensor._from_op("sqnorm", np.array(np.sum(ad * ad)), (a,), lambda g: (2.0 * g * ad,))


def reshape(a, shape) -> Tensor:
    a = tensor(a)
    old = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view {old} as {tuple(shape)}") from None
    return Tensor._from_op("reshape", out, (a,), lambda g: (g.reshape(old),))


def transpose(a, axes=None) -> Tensor:
    a = tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inv = tuple(np.argsort(axes))
    return Tensor._from_op("transpose", np.transpose(a.data, axes), (a,),
                           lambda g: (np.transpose(g, inv),))


def take(a, idx) -> Tensor:
    """Basic or advanced indexing; repeated indices accumulate in backward."""
    a = tensor(a)
    if isinstance(idx, Tensor):
        idx = idx.data.astype(int)
    shape = a.shape

    def back(g):
        z = np.zeros(shape)
        np.add.at(z, idx, g)
        return (z,)

    return Tensor._from_op("getitem", a.data[idx], (a,), back)


def concat(tensors: Iterable, axis: int = 0) -> Tensor:
    ts = [tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in ts]}") from None
    sizes = np.cumsum([t.shape[axis] for t in ts])[:-1]
    return Tensor._from_op("concat", out, ts, lambda g: tuple(np.split(g, sizes, axis=axis)))


def stack(tensors: Iterable, axis: int = 0) -> Tensor:
    ts = [tensor(t) for t in tensors]
    try:
        out = np.stack([t.data for t in ts], axis=axis)
    except ValueError:
        raise ShapeError(f"stack: incompatible shapes {[t.shape for t in ts]}") from None
    n = len(ts)
    return Tensor._from_op("stack", out, ts,
                           lambda g: tuple(np.take(g, i, axis=axis) for i in range(n)))


# -- linear algebra -------------------------------------------------------------

def matmul(a, b) -> Tensor:
    """Matrix product with numpy semantics (1-D promotion, batch broadcast)."""
    a, b = tensor(a), tensor(b)
    if a.ndim == 0 or b.ndim == 0:
        raise ShapeError(f"matmul: scalar operand, shapes {a.shape} and {b.shape}")
    a1 = a.data if a.ndim > 1 else a.data[None, :]
    b1 = b.data if b.ndim > 1 else b.data[:, None]
    if a1.shape[-1] != b1.shape[-2]:
        raise ShapeError(f"matmul: inner dimensions differ for shapes {a.shape} and {b.shape}")
    try:
        out1 = a1 @ b1
    except ValueError:
        raise ShapeError(f"matmul: incompatible batch shapes {a.shape} and {b.shape}") from None
    out = out1
    if a.ndim == 1:
        out = out[..., 0, :]
    if b.ndim == 1:
        out = out[..., 0]
    sa, sb = a.shape, b.shape

    def back(g):
        g1 = g.reshape(out1.shape)
        ga = g1 @ np.swapaxes(b1, -1, -2)
        gb = np.swapaxes(a1, -1, -2) @ g1
        return (_unbroadcast(ga, a1.shape).reshape(sa), _unbroadcast(gb, b1.shape).reshape(sb))

    return Tensor._from_op("matmul", out, (a, b), back)


def solve(A, B) -> Tensor:
    """X with A X = B, batched over leading axes; B must be a matrix (or batch)."""
    A, B = tensor(A), tensor(B)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ShapeError(f"solve: coefficient matrix must be square, got {A.shape}")
    if B.ndim != A.ndim or B.shape[-2] != A.shape[-1]:
        raise ShapeError(f"solve: right-hand side {B.shape} does not match {A.shape}")
    try:
        X = np.linalg.solve(A.data, B.data)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"solve: {exc}") from None
    Ad = A.data

    def back(g):
        gB = np.linalg.solve(np.swapaxes(Ad, -1, -2), g)
        gA = -gB @ np.swapaxes(X, -1, -2)
        return (_unbroadcast(gA, A.shape), _unbroadcast(gB, B.shape))

    return Tensor._from_op("solve", X, (A, B), back)
