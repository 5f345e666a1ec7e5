"""Graph inputs (X, A) for a deployment."""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from relaynet.channel import ChannelParams, Deployment, adjacency


def build_features(dep: Deployment) -> np.ndarray:
    """n x 3: endpoint flag, then the coordinates."""
    X = np.zeros((dep.n, 3))
    X[[dep.source_index, dep.dest_index], 0] = 1.0
    X[:, 1:] = dep.positions
    return X


def graph_inputs(params: ChannelParams, dep: Deployment) -> Tuple[np.ndarray, np.ndarray]:
    return build_features(dep), adjacency(params, dep)


def stack_inputs(
    params: ChannelParams, deployments: Sequence[Deployment]
) -> Tuple[np.ndarray, np.ndarray]:
    """Batch equal-size deployments along a leading axis."""
    pairs = [graph_inputs(params, dep) for dep in deployments]
    return np.stack([X for X, _ in pairs]), np.stack([A for _, A in pairs])
