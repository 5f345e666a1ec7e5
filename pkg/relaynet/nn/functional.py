"""Differentiable primitives.

Every function accepts :class:`Tensor` or plain arrays. The result is recorded
on the tape of the first taped argument; with no taped argument it is a plain
constant tensor. Leading batch dimensions broadcast as in numpy.
"""

from __future__ import annotations

import math
from typing import Sequence, Tuple

import numpy as np
from scipy.special import erf, expit

from relaynet.errors import ShapeError, SizeError
from relaynet.nn.tensor import Tensor, as_tensor

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
MIN_STD = 1e-8


def _emit(op: str, value: np.ndarray, parents: Tuple[Tensor, ...], vjp) -> Tensor:
    for p in parents:
        if p.tape is not None:
            for q in parents:
                if q.tape is not None and q.tape is not p.tape:
                    raise ShapeError(f"{op}: arguments live on different tapes")
            return p.tape.record(op, value, parents, vjp)
    return Tensor(value)


def _unbroadcast(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _swap(x: np.ndarray) -> np.ndarray:
    return np.swapaxes(x, -1, -2)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    value = np.matmul(a.data, b.data)

    def vjp(g):
        return (
            _unbroadcast(np.matmul(g, _swap(b.data)), a.shape),
            _unbroadcast(np.matmul(_swap(a.data), g), b.shape),
        )

    return _emit("matmul", value, (a, b), vjp)


def _check_broadcast(op, a: Tensor, b: Tensor) -> np.ndarray:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("add", a, b)
    value = a.data + b.data
    return _emit("add", value, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("sub", a, b)
    value = a.data - b.data
    return _emit("sub", value, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("mul", a, b)
    value = a.data * b.data

    def vjp(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _emit("mul", value, (a, b), vjp)


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    return _emit("scale", a.data * c, (a,), lambda g: (g * c,))


def row_sum(a) -> Tensor:
    """Sum over the last axis."""
    a = as_tensor(a)
    value = a.data.sum(axis=-1)
    return _emit("row_sum", value, (a,), lambda g: (np.broadcast_to(g[..., None], a.shape).copy(),))


def total(a) -> Tensor:
    a = as_tensor(a)
    return _emit("sum", np.asarray(a.data.sum()), (a,), lambda g: (np.full(a.shape, float(g)),))


def mean(a) -> Tensor:
    a = as_tensor(a)
    n = a.data.size
    return _emit("mean", np.asarray(a.data.mean()), (a,), lambda g: (np.full(a.shape, float(g) / n),))


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    return _emit("reshape", a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def select_rows(a, rows: Sequence[int]) -> Tensor:
    """Rows along the node axis (second to last)."""
    a = as_tensor(a)
    rows = np.asarray(rows, dtype=np.intp)
    value = a.data[..., rows, :]

    def vjp(g):
        out = np.zeros_like(a.data)
        np.add.at(out, (Ellipsis, rows, slice(None)), g)
        return (out,)

    return _emit("select_rows", value, (a,), vjp)


def gelu(a) -> Tensor:
    """Exact GELU, x * Phi(x)."""
    a = as_tensor(a)
    x = a.data
    cdf = 0.5 * (1.0 + erf(x / _SQRT2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return _emit("gelu", x * cdf, (a,), lambda g: (g * (cdf + x * pdf),))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.data)
    return _emit("tanh", y, (a,), lambda g: (g * (1.0 - y * y),))


def softplus(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    return _emit("softplus", np.logaddexp(0.0, x), (a,), lambda g: (g * expit(x),))


def relu(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    return _emit("relu", np.maximum(x, 0.0), (a,), lambda g: (g * (x > 0),))


def linear(x, W, b=None) -> Tensor:
    out = matmul(x, W)
    return out if b is None else add(out, b)


def graph_conv(X, A, W1, W2, bias=None) -> Tensor:
    """x'_i = W1^T x_i + W2^T sum_j A_ij x_j, i.e. X W1 + (A X) W2."""
    X, A = as_tensor(X), as_tensor(A)
    if A.shape[-1] != A.shape[-2] or A.shape[-1] != X.shape[-2]:
        raise ShapeError(f"graph_conv: adjacency {A.shape} does not match features {X.shape}")
    out = add(matmul(X, W1), matmul(matmul(A, X), W2))
    return out if bias is None else add(out, bias)


def first_order_conv(X, A, W, bias=None) -> Tensor:
    """x'_i = W^T (x_i + sum_j A_ij x_j): one shared transform, no separate root weight."""
    X, A = as_tensor(X), as_tensor(A)
    if A.shape[-1] != A.shape[-2] or A.shape[-1] != X.shape[-2]:
        raise ShapeError(f"first_order_conv: adjacency {A.shape} does not match features {X.shape}")
    out = matmul(add(X, matmul(A, X)), W)
    return out if bias is None else add(out, bias)


def global_add_pool(X) -> Tensor:
    """Column sums over the node axis: (..., n, d) -> (..., d)."""
    X = as_tensor(X)
    value = X.data.sum(axis=-2)
    return _emit(
        "global_add_pool", value, (X,), lambda g: (np.broadcast_to(g[..., None, :], X.shape).copy(),)
    )


def sort_order(features: np.ndarray, k: int) -> np.ndarray:
    """Indices of the top-k nodes, descending by the last channel.

    Ties fall back to channels 0, 1, ... (descending), which makes the
    selection independent of the input row order.
    """
    d = features.shape[-1]
    keys = [-features[:, c] for c in range(d - 2, -1, -1)] + [-features[:, d - 1]]
    return np.lexsort(keys)[:k]


def global_sort_pool(X, k: int) -> Tensor:
    """Top-k node rows (see :func:`sort_order`) flattened: (..., n, d) -> (..., k*d)."""
    X = as_tensor(X)
    n, d = X.shape[-2], X.shape[-1]
    if k > n:
        raise SizeError(f"global_sort_pool: k={k} exceeds node count {n}")
    batched = X.data.reshape((-1, n, d))
    orders = np.stack([sort_order(graph, k) for graph in batched])
    picked = np.take_along_axis(batched, orders[:, :, None], axis=1)
    value = picked.reshape(X.shape[:-2] + (k * d,))

    def vjp(g):
        out = np.zeros_like(batched)
        gb = g.reshape((-1, k, d))
        for b in range(batched.shape[0]):
            out[b, orders[b]] += gb[b]
        return (out.reshape(X.shape),)

    return _emit("global_sort_pool", value, (X,), vjp)


def graph_size_norm(X) -> Tensor:
    """Divide every node row by sqrt(n)."""
    X = as_tensor(X)
    n = X.shape[-2]
    if n < 1:
        raise ShapeError("graph_size_norm: empty graph")
    return scale(X, 1.0 / math.sqrt(n))


def log_normal_density(actions: np.ndarray, means, stds) -> Tensor:
    """Sum over the last axis of log N(a; mu, sigma) for independent components."""
    means, stds = as_tensor(means), as_tensor(stds)
    a = np.asarray(actions, dtype=np.float64)
    mu, sigma = means.data, np.maximum(stds.data, MIN_STD)
    z = (a - mu) / sigma
    value = np.sum(-0.5 * z * z - np.log(sigma) - 0.5 * math.log(2.0 * math.pi), axis=-1)

    def vjp(g):
        g = g[..., None]
        return g * z / sigma, g * (z * z - 1.0) / sigma

    return _emit("log_normal_density", value, (means, stds), vjp)
