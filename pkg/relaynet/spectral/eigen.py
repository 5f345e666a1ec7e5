"""Cyclic Jacobi eigensolver for small dense symmetric matrices."""

from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from relaynet.errors import EigenConvergenceError, InputError

OFF_DIAGONAL_TOL = 1e-12
MAX_SWEEPS = 100


def _off_diagonal(a: np.ndarray) -> float:
    # summed over the off-diagonal entries themselves; total minus diagonal cancels
    return float(np.sqrt(np.sum(np.square(a[~np.eye(a.shape[0], dtype=bool)]))))


def jacobi_eigh(M, *, tol: float = OFF_DIAGONAL_TOL, max_sweeps: int = MAX_SWEEPS) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unit eigenvectors (columns) of a symmetric matrix."""
    a = np.array(M, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError("matrix entries must be finite")
    scale = max(1.0, float(np.linalg.norm(a)))
    if np.max(np.abs(a - a.T), initial=0.0) > 1e-9 * scale:
        raise InputError("matrix must be symmetric")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    V = np.eye(n)

    for _ in range(max_sweeps):
        if _off_diagonal(a) < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                v_p, v_q = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q
    else:
        if _off_diagonal(a) >= tol * scale:
            raise EigenConvergenceError(
                f"Jacobi iteration did not converge in {max_sweeps} sweeps (off-diagonal mass {_off_diagonal(a):.3g})"
            )

    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return values[order], V[:, order]
