from __future__ import annotations

import numpy as np

from relaynet.errors import ShapeError
from relaynet.nn import functional as F
from relaynet.nn.tensor import Tensor, as_tensor


def _same_shape(op: str, pred: Tensor, target: Tensor) -> None:
    if pred.shape != target.shape:
        raise ShapeError(f"{op}: prediction {pred.shape} does not match target {target.shape}")


def mse(pred, target) -> Tensor:
    pred, target = as_tensor(pred), as_tensor(target)
    _same_shape("mse", pred, target)
    diff = F.sub(pred, target)
    return F.mean(F.mul(diff, diff))


def frobenius_mse(pred, target) -> Tensor:
    """Squared Frobenius norm of each (..., r, c) sample, averaged over leading axes."""
    pred, target = as_tensor(pred), as_tensor(target)
    _same_shape("frobenius_mse", pred, target)
    if pred.data.ndim < 2:
        raise ShapeError(f"frobenius_mse needs matrices, got shape {pred.shape}")
    diff = F.sub(pred, target)
    per_sample = int(np.prod(pred.shape[-2:]))
    return F.scale(F.mean(F.mul(diff, diff)), float(per_sample))


def huber(x) -> Tensor:
    """Mean of 0.5 x^2 (|x| < 1) or |x| - 0.5 (otherwise)."""
    x = as_tensor(x)
    v = x.data
    inner = np.abs(v) < 1.0
    value = np.where(inner, 0.5 * v * v, np.abs(v) - 0.5).mean()
    n = v.size

    def vjp(g):
        return (float(g) * np.where(inner, v, np.sign(v)) / n,)

    return F._emit("huber", np.asarray(value), (x,), vjp)
