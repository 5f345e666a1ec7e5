"""SIR-based link capacities of a jammed relay network and their position derivatives.

Node ids are 0-based: the source is node 0, the destination node n-1 and the
relays 1..n-2. Coordinates are in arena units (1 unit = 50 m).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence, Tuple

import numpy as np
from scipy.special import expit

from relaynet.errors import DegenerateGeometryError, InputError


@dataclass(frozen=True)
class ChannelParams:
    alpha: float = 2.0
    eta: float = 2.0
    bandwidth: float = 1.0
    r_int: float = 1.0
    rho: float = 1.0
    kappa: float = 10.0
    z0: float = 1e-3
    min_distance: float = 1e-6

    def __post_init__(self):
        for name in ("alpha", "eta", "bandwidth", "r_int", "rho", "kappa", "z0", "min_distance"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InputError(f"channel parameter {name} must be positive, got {value}")
        if self.z0 >= 1:
            raise InputError(f"channel parameter z0 must be below 1, got {self.z0}")

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> "ChannelParams":
        return cls(
            alpha=config["CHANNEL_ALPHA"],
            eta=config["CHANNEL_ETA"],
            bandwidth=config["CHANNEL_BANDWIDTH"],
            r_int=config["CHANNEL_R_INT"],
            rho=config["CHANNEL_RHO"],
            kappa=config["CHANNEL_KAPPA"],
            z0=config["CHANNEL_Z0"],
            min_distance=config["CHANNEL_MIN_DISTANCE"],
        )


@dataclass(frozen=True, eq=False)
class Deployment:
    """Positions of the n legitimate nodes and the jammer.

    Arrays are stored read-only; use :meth:`with_relays` to derive a moved copy.
    """

    positions: np.ndarray
    jammer: np.ndarray

    def __post_init__(self):
        positions = np.array(self.positions, dtype=np.float64)
        jammer = np.array(self.jammer, dtype=np.float64).reshape(-1)
        if positions.ndim != 2 or positions.shape[1] != 2:
            raise InputError(f"positions must be n x 2, got shape {positions.shape}")
        if positions.shape[0] < 3:
            raise InputError(f"a deployment needs at least 3 nodes, got {positions.shape[0]}")
        if jammer.shape != (2,):
            raise InputError(f"jammer must be a 2-vector, got shape {jammer.shape}")
        if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(jammer))):
            raise InputError("deployment coordinates must be finite")
        positions.setflags(write=False)
        jammer.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "jammer", jammer)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def source_index(self) -> int:
        return 0

    @property
    def dest_index(self) -> int:
        return self.n - 1

    @property
    def relays(self) -> np.ndarray:
        return self.positions[1:-1]

    def with_relays(self, relays: np.ndarray) -> "Deployment":
        positions = np.array(self.positions)
        positions[1:-1] = relays
        return Deployment(positions, self.jammer)

    def same_as(self, other: "Deployment") -> bool:
        return np.array_equal(self.positions, other.positions) and np.array_equal(
            self.jammer, other.jammer
        )


def reference_layout(jammer: Sequence[float] = (0.0, 3.0)) -> Deployment:
    """The six-node evaluation layout: fixed endpoints, relays evenly spaced on the axis."""
    positions = [(-4.5, 0.0), (-2.7, 0.0), (-0.9, 0.0), (0.9, 0.0), (2.7, 0.0), (4.5, 0.0)]
    return Deployment(np.array(positions), np.array(jammer, dtype=np.float64))


def nu(params: ChannelParams, z):
    """Smoothed step: rho * exp(-kappa z - ln z0) / (1 + exp(-kappa z - ln z0))."""
    z = np.asarray(z, dtype=np.float64)
    return params.rho * expit(-params.kappa * z - math.log(params.z0))


def nu_prime(params: ChannelParams, z):
    v = nu(params, z)
    return -params.kappa * v * (1.0 - v / params.rho)


@dataclass(frozen=True)
class _Geometry:
    diff: np.ndarray  # (n, n, 2): positions[i] - positions[k]
    dist: np.ndarray  # (n, n), zero diagonal
    jam_diff: np.ndarray  # (n, 2): positions[i] - jammer
    jam_dist: np.ndarray  # (n,)


def _geometry(params: ChannelParams, dep: Deployment) -> _Geometry:
    p = dep.positions
    diff = p[:, None, :] - p[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    jam_diff = p - dep.jammer[None, :]
    jam_dist = np.sqrt(np.sum(jam_diff * jam_diff, axis=-1))
    n = dep.n
    off = ~np.eye(n, dtype=bool)
    if np.any(dist[off] < params.min_distance):
        i, k = np.argwhere((dist < params.min_distance) & off)[0]
        raise DegenerateGeometryError(f"nodes {i} and {k} are {dist[i, k]:.3g} apart")
    if np.any(jam_dist < params.min_distance):
        i = int(np.argmin(jam_dist))
        raise DegenerateGeometryError(f"node {i} coincides with the jammer")
    return _Geometry(diff, dist, jam_diff, jam_dist)


@dataclass(frozen=True)
class _Link:
    power: np.ndarray  # P[i, j] = d_ij^-alpha, zero diagonal
    interference: np.ndarray  # I[i, j] = eta d_jJ^-alpha + sum_{k != i, j} nu(d_jk / r)
    sir: np.ndarray
    nu: np.ndarray  # N[j, k] = nu(d_jk / r), zero diagonal


def _links(params: ChannelParams, geo: _Geometry) -> _Link:
    n = geo.dist.shape[0]
    eye = np.eye(n, dtype=bool)
    safe = np.where(eye, 1.0, geo.dist)
    power = np.where(eye, 0.0, safe ** (-params.alpha))
    N = np.where(eye, 0.0, nu(params, safe / params.r_int))
    jam = params.eta * geo.jam_dist ** (-params.alpha)
    # I[i, j] depends on the receiver j; drop k = i (k = j is the zero diagonal)
    interference = (jam + N.sum(axis=1))[None, :] - N.T
    sir = power / interference
    return _Link(power, interference, sir, N)


def _harmonic(params: ChannelParams, a: np.ndarray) -> np.ndarray:
    """B / (1/a + 1/a^T) written as B a a^T / (a + a^T), zero where both rates vanish."""
    b = a.T
    total = a + b
    safe = np.where(total > 0, total, 1.0)
    return np.where(total > 0, params.bandwidth * a * b / safe, 0.0)


def sir(params: ChannelParams, dep: Deployment, i: int, j: int) -> float:
    """Signal-to-interference ratio of the transmission i -> j."""
    _check_pair(dep, i, j)
    link = _links(params, _geometry(params, dep))
    return float(link.sir[i, j])


def capacity(params: ChannelParams, dep: Deployment, i: int, j: int) -> float:
    """Two-way average rate between nodes i and j; 0 on the diagonal."""
    if i == j:
        _check_node(dep, i)
        return 0.0
    _check_pair(dep, i, j)
    return float(adjacency(params, dep)[i, j])


def adjacency(params: ChannelParams, dep: Deployment) -> np.ndarray:
    """Capacity adjacency matrix: symmetric, zero diagonal, nonnegative."""
    link = _links(params, _geometry(params, dep))
    A = _harmonic(params, np.log1p(link.sir))
    np.fill_diagonal(A, 0.0)
    return A


def _adjacency_derivatives(
    params: ChannelParams, dep: Deployment, nodes: Sequence[int]
) -> np.ndarray:
    geo = _geometry(params, dep)
    link = _links(params, geo)
    n = dep.n
    eye = np.eye(n, dtype=bool)
    safe = np.where(eye, 1.0, geo.dist)
    alpha, r = params.alpha, params.r_int
    dnu = np.where(eye, 0.0, nu_prime(params, safe / r) / r)

    S = link.sir
    a = np.log1p(S)
    b = a.T
    total = a + b
    denom = np.where(total > 0, total * total, 1.0)

    out = np.zeros((len(nodes), 2, n, n))
    for slot, i in enumerate(nodes):
        for m in range(2):
            # d(distance)/d(x_i^m): only row and column i of the distance matrix move
            ddist = np.zeros((n, n))
            row = np.where(eye[i], 0.0, geo.diff[i, :, m] / safe[i])
            ddist[i, :] = row
            ddist[:, i] = row
            djam = np.zeros(n)
            djam[i] = geo.jam_diff[i, m] / geo.jam_dist[i]

            dpower = np.where(eye, 0.0, -alpha * safe ** (-alpha - 1.0) * ddist)
            dN = dnu * ddist
            djam_term = -alpha * params.eta * geo.jam_dist ** (-alpha - 1.0) * djam
            dinterference = (djam_term + dN.sum(axis=1))[None, :] - dN.T
            dS = (dpower * link.interference - link.power * dinterference) / (
                link.interference**2
            )
            da = dS / (1.0 + S)
            db = da.T
            dA = np.where(
                total > 0, params.bandwidth * (da * b * b + db * a * a) / denom, 0.0
            )
            np.fill_diagonal(dA, 0.0)
            out[slot, m] = dA
    return out


def adjacency_grad(params: ChannelParams, dep: Deployment, i: int, m: int) -> np.ndarray:
    """[dA_pq / dx_i^(m)] for relay i and coordinate m in {0, 1}."""
    if not 1 <= i <= dep.n - 2:
        raise InputError(f"node {i} is not a relay (relays are 1..{dep.n - 2})")
    if m not in (0, 1):
        raise InputError(f"coordinate index must be 0 or 1, got {m}")
    return _adjacency_derivatives(params, dep, [i])[0, m]


def adjacency_jacobian(params: ChannelParams, dep: Deployment) -> np.ndarray:
    """All relay derivatives at once, shape (n-2, 2, n, n)."""
    return _adjacency_derivatives(params, dep, range(1, dep.n - 1))


def _check_node(dep: Deployment, i: int) -> None:
    if not 0 <= i < dep.n:
        raise InputError(f"node id {i} outside 0..{dep.n - 1}")


def _check_pair(dep: Deployment, i: int, j: int) -> Tuple[int, int]:
    _check_node(dep, i)
    _check_node(dep, j)
    if i == j:
        raise InputError("SIR is undefined for i == j")
    return i, j
