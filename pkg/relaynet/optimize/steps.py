"""Single relay-update steps for every placement method.

Every step moves only the relays, each by ``zeta`` along a unit direction (or
not at all when its direction vanishes), then optionally clamps them to the
arena box.
"""

from __future__ import annotations

import logging
from typing import Optional, Tuple

import numpy as np

from relaynet.channel import ChannelParams, Deployment, adjacency, adjacency_jacobian
from relaynet.errors import InputError, NonFiniteError, RelaynetError
from relaynet.flow import max_flow
from relaynet.models import ActorModel, GlModel, MflModel, actor_forward, build_features
from relaynet.nn import Tape, grad_wrt_inputs
from relaynet.spectral import unit_directions, wcc_step

logger = logging.getLogger(__name__)

MFL = "mfl"
GL = "gl"
WCC = "wcc"
HYBRID = "hybrid"
RL = "rl"
METHODS = (MFL, GL, WCC, HYBRID, RL)


def flow_value(params: ChannelParams, dep: Deployment) -> float:
    return max_flow(adjacency(params, dep), dep.source_index, dep.dest_index).value


def clamp_relays(dep: Deployment, half_width: Optional[float]) -> Deployment:
    if half_width is None:
        return dep
    return dep.with_relays(np.clip(dep.relays, -half_width, half_width))


def move_relays(dep: Deployment, directions: np.ndarray, zeta: float, half_width: Optional[float] = None) -> Deployment:
    moved = dep.relays + zeta * directions
    if not np.all(np.isfinite(moved)):
        raise NonFiniteError("relay update produced non-finite positions")
    return clamp_relays(dep.with_relays(moved), half_width)


def mfl_gradient(model: MflModel, params: ChannelParams, dep: Deployment) -> np.ndarray:
    """Total derivative of the MFL output w.r.t. every relay coordinate, shape (n-2, 2).

    Sums the feature path (coordinates sit in columns 1-2 of X) and the
    adjacency path through dA/dx.
    """
    tape = Tape()
    X = tape.input("X", build_features(dep))
    A = tape.input("A", adjacency(params, dep))
    out = model.forward(X, A)
    dX, dA = grad_wrt_inputs(tape, out)
    through_features = dX[1:-1, 1:3]
    through_adjacency = np.einsum("imst,st->im", adjacency_jacobian(params, dep), dA)
    return through_features + through_adjacency


def mfl_step(
    model: MflModel,
    params: ChannelParams,
    dep: Deployment,
    zeta: float,
    *,
    mode: str = "vector",
    half_width: Optional[float] = None,
) -> Deployment:
    grad = mfl_gradient(model, params, dep)
    if mode == "vector":
        directions = unit_directions(grad)
    elif mode == "sign":
        directions = np.sign(grad)
    else:
        raise InputError(f"unknown MFL update mode {mode!r}")
    return move_relays(dep, directions, zeta, half_width)


def gl_step(
    model: GlModel, params: ChannelParams, dep: Deployment, zeta: float, *, half_width: Optional[float] = None
) -> Deployment:
    raw = model.forward(build_features(dep), adjacency(params, dep)).data
    return move_relays(dep, unit_directions(raw), zeta, half_width)


def hybrid_step(
    mfl_model: MflModel,
    params: ChannelParams,
    dep: Deployment,
    W,
    zeta: float,
    *,
    mode: str = "vector",
    half_width: Optional[float] = None,
) -> Tuple[Deployment, str]:
    """Take whichever of the MFL and WCC moves yields the larger exact max-flow.

    Ties go to MFL. A branch that fails is skipped; if both fail the MFL error is raised.
    """
    candidates = {}
    errors = {}
    for tag in (MFL, WCC):
        try:
            if tag == MFL:
                cand = mfl_step(mfl_model, params, dep, zeta, mode=mode, half_width=half_width)
            else:
                cand = clamp_relays(wcc_step(params, dep, W, zeta, strict=True), half_width)
            candidates[tag] = (cand, flow_value(params, cand))
        except RelaynetError as e:
            logger.warning(f"hybrid: {tag} branch failed ({type(e).__name__}: {e}); using the other branch")
            errors[tag] = e
    if not candidates:
        raise errors[MFL]
    if len(candidates) == 1:
        tag = next(iter(candidates))
    else:
        tag = MFL if candidates[MFL][1] >= candidates[WCC][1] else WCC
    return candidates[tag][0], tag


def rl_step(
    actor: ActorModel, params: ChannelParams, dep: Deployment, zeta: float, *, half_width: Optional[float] = None
) -> Deployment:
    """Deterministic policy move: the actor's mean action, normalized per relay."""
    means, _ = actor_forward(actor, build_features(dep), adjacency(params, dep))
    if not np.all(np.isfinite(means)):
        raise NonFiniteError("actor produced non-finite means")
    return move_relays(dep, unit_directions(means.reshape(-1, 2)), zeta, half_width)
