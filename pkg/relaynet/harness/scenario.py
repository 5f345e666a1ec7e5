"""Experiment scenario: arena, fixed endpoints, relay start and jammer sampling."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Tuple

import numpy as np

from relaynet.channel import ChannelParams, Deployment
from relaynet.errors import InputError, RecordError
from relaynet.utils import records, seeding

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    half_width: float = 6.0
    unit_meters: float = 50.0
    source: Tuple[float, float] = (-4.5, 0.0)
    dest: Tuple[float, float] = (4.5, 0.0)
    relay_init: Tuple[Tuple[float, float], ...] = ((-2.7, 0.0), (-0.9, 0.0), (0.9, 0.0), (2.7, 0.0))
    guard_radius: float = 3.0
    zeta: float = 0.02
    steps: int = 400
    snapshot_interval: int = 5
    clamp: bool = True
    mfl_update_mode: str = "vector"
    wcc_endpoint_factor: float = 3.0
    seed: int = 0
    channel: ChannelParams = field(default_factory=ChannelParams)

    def __post_init__(self):
        if self.half_width <= 0 or self.guard_radius <= 0:
            raise InputError("arena half-width and guard radius must be positive")
        for name in ("source", "dest"):
            x, y = getattr(self, name)
            if max(abs(x), abs(y)) > self.half_width:
                raise InputError(f"{name} {getattr(self, name)} lies outside the arena")
        if self.zeta < 0 or self.steps < 0 or self.snapshot_interval < 1:
            raise InputError("step size, step count and snapshot interval must be nonnegative")
        if self.mfl_update_mode not in ("vector", "sign"):
            raise InputError(f"unknown MFL update mode {self.mfl_update_mode!r}")

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> "ExperimentConfig":
        return cls(
            half_width=config["ARENA_HALF_WIDTH"],
            unit_meters=config["UNIT_METERS"],
            source=tuple(config["SOURCE_POSITION"]),
            dest=tuple(config["DEST_POSITION"]),
            relay_init=tuple(tuple(p) for p in config["RELAY_INIT"]),
            guard_radius=config["GUARD_RADIUS"],
            zeta=config["STEP_SIZE"],
            steps=config["STEPS"],
            snapshot_interval=config["SNAPSHOT_INTERVAL"],
            clamp=config["CLAMP_TO_ARENA"],
            mfl_update_mode=config["MFL_UPDATE_MODE"],
            wcc_endpoint_factor=config["WCC_ENDPOINT_FACTOR"],
            seed=config["SEED"],
            channel=ChannelParams.from_config(config),
        )

    @property
    def n(self) -> int:
        return len(self.relay_init) + 2


def initial_deployment(cfg: ExperimentConfig, jammer) -> Deployment:
    positions = np.array([cfg.source, *cfg.relay_init, cfg.dest], dtype=np.float64)
    return Deployment(positions, np.asarray(jammer, dtype=np.float64))


def jammer_allowed(cfg: ExperimentConfig, jammer) -> bool:
    jammer = np.asarray(jammer, dtype=np.float64)
    return bool(
        np.linalg.norm(jammer - np.asarray(cfg.source)) > cfg.guard_radius
        and np.linalg.norm(jammer - np.asarray(cfg.dest)) > cfg.guard_radius
    )


def sample_jammer(cfg: ExperimentConfig, rng: np.random.Generator) -> Tuple[np.ndarray, int]:
    """Uniform over the arena outside both guard disks; returns the point and the draws used."""
    draws = 0
    while True:
        draws += 1
        jammer = rng.uniform(-cfg.half_width, cfg.half_width, size=2)
        if jammer_allowed(cfg, jammer):
            return jammer, draws


def sample_deployments(cfg: ExperimentConfig, count: int, purpose: int, seed: int) -> List[Deployment]:
    """``count`` starting deployments; deployment i depends only on (seed, purpose, i)."""
    if count < 1:
        raise InputError(f"deployment count must be at least 1, got {count}")
    return [
        initial_deployment(cfg, sample_jammer(cfg, seeding.stream(seed, purpose, i))[0])
        for i in range(count)
    ]


def deployment_record(index: int, dep: Deployment) -> Dict[str, Any]:
    return {
        "schema": records.SCHEMA_VERSION,
        "deployment": index,
        "positions": dep.positions,
        "jammer": dep.jammer,
    }


def deployment_from_record(record: Dict[str, Any]) -> Deployment:
    records.require(record, "positions", "jammer")
    try:
        return Deployment(np.array(record["positions"], dtype=np.float64), np.array(record["jammer"], dtype=np.float64))
    except (TypeError, ValueError) as e:
        raise RecordError(f"bad deployment record: {e}") from e


def gen_testset(cfg: ExperimentConfig, count: int, path, seed: int) -> List[Deployment]:
    deployments = sample_deployments(cfg, count, seeding.TEST, seed)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records.write_records(path, (deployment_record(i, d) for i, d in enumerate(deployments)))
    logger.info(f"Wrote {count} test deployments to {path}")
    return deployments


def read_deployments(path) -> List[Tuple[int, Deployment]]:
    out = []
    for record in records.iter_records(path):
        records.require(record, "deployment")
        out.append((int(record["deployment"]), deployment_from_record(record)))
    return out
