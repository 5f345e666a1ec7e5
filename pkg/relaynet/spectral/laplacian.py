"""Weighted Laplacian, its second-smallest eigenvalue and the relay moves that raise it."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from relaynet.channel import ChannelParams, Deployment, adjacency, adjacency_jacobian
from relaynet.errors import DegenerateEigenvalueError, InputError
from relaynet.spectral.eigen import jacobi_eigh

logger = logging.getLogger(__name__)

EIGEN_GAP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class WeightedLaplacian:
    matrix: np.ndarray  # W^-1/2 (D - A) W^-1/2
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def endpoint_weights(n: int, factor: float = 3.0) -> np.ndarray:
    """Unit weights with ``factor * n`` on the source and the destination."""
    if n < 2:
        raise InputError(f"need at least two nodes, got {n}")
    w = np.ones(n)
    w[0] = w[-1] = factor * n
    return w


def weighted_laplacian(A, W) -> WeightedLaplacian:
    A = np.asarray(A, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64).reshape(-1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or W.shape != (A.shape[0],):
        raise InputError(f"adjacency {A.shape} and weights {W.shape} do not match")
    if not (np.all(np.isfinite(W)) and np.all(W > 0)):
        raise InputError("weights must be positive")
    if np.any(A < 0) or not np.allclose(A, A.T, rtol=0.0, atol=1e-12):
        raise InputError("adjacency must be symmetric and nonnegative")
    L = np.diag(A.sum(axis=1)) - A
    s = 1.0 / np.sqrt(W)
    return WeightedLaplacian(matrix=s[:, None] * L * s[None, :], weights=W)


def lambda2(L_W) -> Tuple[float, np.ndarray]:
    """Second-smallest eigenvalue and its unit eigenvector (first nonzero entry positive)."""
    value, vector, _ = _second_pair(L_W)
    return value, vector


def _second_pair(L_W) -> Tuple[float, np.ndarray, float]:
    M = L_W.matrix if isinstance(L_W, WeightedLaplacian) else np.asarray(L_W, dtype=np.float64)
    if M.shape[0] < 2:
        raise InputError("lambda_2 needs at least two nodes")
    values, vectors = jacobi_eigh(M)
    v = vectors[:, 1]
    nonzero = np.flatnonzero(np.abs(v) > 1e-12)
    if nonzero.size and v[nonzero[0]] < 0:
        v = -v
    gap = float(values[2] - values[1]) if len(values) > 2 else np.inf
    return float(values[1]), v, gap


def lambda2_grad(
    params: ChannelParams, dep: Deployment, W, *, strict: bool = False
) -> np.ndarray:
    """d lambda_2 / d x_i^(m) for every relay, shape (n-2, 2).

    Uses v^T W^-1/2 (dL/dx) W^-1/2 v. When lambda_2 is not simple the result is a
    subgradient from the eigenvector the solver orders first; with ``strict`` that
    case raises instead.
    """
    W = np.asarray(W, dtype=np.float64)
    L_W = weighted_laplacian(adjacency(params, dep), W)
    value, v, gap = _second_pair(L_W)
    if gap < EIGEN_GAP_TOL:
        if strict:
            raise DegenerateEigenvalueError(f"lambda_2 = {value:.6g} is not simple (gap {gap:.3g})")
        logger.warning(f"lambda_2 = {value:.6g} is not simple (gap {gap:.3g}); using a subgradient")
    u = v / np.sqrt(W)
    # u^T (diag(rowsum dA) - dA) u = 1/2 sum_pq dA_pq (u_p - u_q)^2
    spread = (u[:, None] - u[None, :]) ** 2
    dA = adjacency_jacobian(params, dep)
    return 0.5 * np.einsum("imst,st->im", dA, spread)


def unit_directions(G) -> np.ndarray:
    """Scale every row to unit length; all-zero rows stay zero."""
    G = np.asarray(G, dtype=np.float64)
    norms = np.linalg.norm(G, axis=-1, keepdims=True)
    return np.divide(G, norms, out=np.zeros_like(G), where=norms > 0)


def wcc_step(
    params: ChannelParams, dep: Deployment, W, zeta: float, *, strict: bool = False,
    grad: Optional[np.ndarray] = None,
) -> Deployment:
    """Move every relay by ``zeta`` along its normalized lambda_2 gradient."""
    if grad is None:
        grad = lambda2_grad(params, dep, W, strict=strict)
    return dep.with_relays(dep.relays + zeta * unit_directions(grad))
