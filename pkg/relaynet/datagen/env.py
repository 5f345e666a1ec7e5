"""Relay-placement environment for the PPO data generator."""

from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np

from relaynet.channel import ChannelParams, Deployment, adjacency
from relaynet.errors import InputError
from relaynet.models import build_features
from relaynet.optimize.steps import flow_value, move_relays
from relaynet.spectral import unit_directions


class RelayEnv:
    """Cycles over starting deployments; the reward is the max-flow increment of a move.

    A raw action is an (n-2) x 2 array; each relay's row is normalized and scaled
    to ``zeta`` before it is applied.
    """

    def __init__(
        self,
        params: ChannelParams,
        scenarios: Sequence[Deployment],
        zeta: float,
        half_width: Optional[float] = None,
    ):
        if not scenarios:
            raise InputError("environment needs at least one starting deployment")
        self.params = params
        self.scenarios = list(scenarios)
        self.zeta = zeta
        self.half_width = half_width
        self.scenario_index = 0
        self.start = self.scenarios[0]
        self.state = self.start
        self.flow = flow_value(params, self.state)

    def select(self, index: int) -> Deployment:
        """Make scenario ``index`` (mod the scenario count) the reset target and reset to it."""
        self.scenario_index = index % len(self.scenarios)
        self.start = self.scenarios[self.scenario_index]
        return self.reset()

    def reset(self) -> Deployment:
        self.state = self.start
        self.flow = flow_value(self.params, self.state)
        return self.state

    def observe(self, dep: Optional[Deployment] = None) -> Tuple[np.ndarray, np.ndarray]:
        dep = self.state if dep is None else dep
        return build_features(dep), adjacency(self.params, dep)

    def step(self, action: np.ndarray) -> Tuple[Deployment, float]:
        """Apply an action to the current state; returns (next state, reward)."""
        action = np.asarray(action, dtype=np.float64).reshape(-1, 2)
        if action.shape[0] != self.state.n - 2:
            raise InputError(f"action has {action.shape[0]} rows, expected {self.state.n - 2}")
        nxt = move_relays(self.state, unit_directions(action), self.zeta, self.half_width)
        nxt_flow = flow_value(self.params, nxt)
        reward = nxt_flow - self.flow
        self.state, self.flow = nxt, nxt_flow
        return nxt, reward
