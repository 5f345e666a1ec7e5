"""Exact max-flow / min-cut on small dense capacity matrices.

Arc i -> j carries capacity A[i, j]; a symmetric matrix therefore models the
undirected network with two opposite arcs per link.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass
from typing import FrozenSet

import numpy as np

from relaynet.errors import InputError, SizeError

logger = logging.getLogger(__name__)

RESIDUAL_EPS = 1e-12
BRUTE_FORCE_MAX_NODES = 20


@dataclass(frozen=True)
class FlowResult:
    value: float
    cut_partition: FrozenSet[int]

    def cut_value(self, A: np.ndarray) -> float:
        n = A.shape[0]
        inside = np.zeros(n, dtype=bool)
        inside[list(self.cut_partition)] = True
        return float(A[np.ix_(inside, ~inside)].sum())


def _validate(A, s: int, t: int) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"capacity matrix must be square, got shape {A.shape}")
    n = A.shape[0]
    if not (0 <= s < n and 0 <= t < n):
        raise InputError(f"terminals ({s}, {t}) outside 0..{n - 1}")
    if s == t:
        raise InputError("source and destination must differ")
    if not np.all(np.isfinite(A)):
        raise InputError("capacities must be finite")
    if np.any(A < 0):
        raise InputError("capacities must be nonnegative")
    return A


def _augmenting_path(residual: np.ndarray, s: int, t: int):
    n = residual.shape[0]
    parent = [-1] * n
    parent[s] = s
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(residual[u] > RESIDUAL_EPS):
            if parent[v] == -1:
                parent[v] = u
                if v == t:
                    return parent
                queue.append(v)
    return None


def _reachable(residual: np.ndarray, s: int) -> FrozenSet[int]:
    seen = {s}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(residual[u] > RESIDUAL_EPS):
            v = int(v)
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return frozenset(seen)


def max_flow(A, s: int, t: int) -> FlowResult:
    """Shortest-augmenting-path (BFS) max-flow; the cut is read off the final residual."""
    A = _validate(A, s, t)
    residual = A.copy()
    np.fill_diagonal(residual, 0.0)
    value = 0.0
    while (parent := _augmenting_path(residual, s, t)) is not None:
        path = []
        v = t
        while v != s:
            path.append((parent[v], v))
            v = parent[v]
        bottleneck = min(residual[u, v] for u, v in path)
        for u, v in path:
            residual[u, v] -= bottleneck
            residual[v, u] += bottleneck
        value += bottleneck
    return FlowResult(value=float(value), cut_partition=_reachable(residual, s))


def brute_force_min_cut(A, s: int, t: int) -> FlowResult:
    """Minimum over all 2^(n-2) partitions with s inside and t outside."""
    A = _validate(A, s, t)
    n = A.shape[0]
    if n > BRUTE_FORCE_MAX_NODES:
        raise SizeError(f"brute-force min-cut enumerates 2^(n-2) cuts; n={n} exceeds {BRUTE_FORCE_MAX_NODES}")
    A = A.copy()
    np.fill_diagonal(A, 0.0)
    others = [k for k in range(n) if k not in (s, t)]
    best_value = np.inf
    best = frozenset([s])
    for bits in itertools.product((False, True), repeat=len(others)):
        inside = np.zeros(n, dtype=bool)
        inside[s] = True
        inside[[k for k, b in zip(others, bits) if b]] = True
        value = A[np.ix_(inside, ~inside)].sum()
        if value < best_value:
            best_value = value
            best = frozenset(int(k) for k in np.flatnonzero(inside))
    return FlowResult(value=float(best_value), cut_partition=best)


def lipschitz_check(A, s: int, t: int, i: int, j: int, delta: float, *, symmetric=True) -> bool:
    """Check |C(A + delta on (i, j)) - C(A)| against the per-edge Lipschitz bound.

    A symmetric perturbation touches both arcs of the link and is held to
    2|delta|; a single directed arc is held to |delta|.
    """
    A = _validate(A, s, t)
    if i == j:
        raise InputError("perturbed entry must be off-diagonal")
    perturbed = A.copy()
    perturbed[i, j] += delta
    if symmetric:
        perturbed[j, i] += delta
    if perturbed[i, j] < 0 or perturbed[j, i] < 0:
        raise InputError("perturbation makes a capacity negative")
    base = max_flow(A, s, t).value
    moved = max_flow(perturbed, s, t).value
    bound = (2.0 if symmetric else 1.0) * abs(delta) + 1e-12
    ok = abs(moved - base) <= bound
    if not ok:
        logger.warning(f"Lipschitz bound violated: |{moved} - {base}| > {bound}")
    return ok
