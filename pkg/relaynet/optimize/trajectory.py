"""Test-phase trajectories: repeated steps of one method from a starting deployment."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from relaynet.channel import Deployment
from relaynet.errors import InputError, RecordError
from relaynet.harness.scenario import ExperimentConfig, deployment_from_record
from relaynet.models import GraphModel
from relaynet.optimize import steps
from relaynet.spectral import endpoint_weights, wcc_step
from relaynet.utils import records
from relaynet.utils.parallel import fan_out

logger = logging.getLogger(__name__)

START = "start"

_REQUIRED_MODEL = {steps.MFL: "mfl", steps.GL: "gl", steps.HYBRID: "mfl", steps.RL: "actor"}


@dataclass
class Trajectory:
    method: str
    deployments: List[Deployment] = field(default_factory=list)
    flows: List[float] = field(default_factory=list)
    branches: List[str] = field(default_factory=list)

    @property
    def final_flow(self) -> float:
        return self.flows[-1]

    @property
    def final(self) -> Deployment:
        return self.deployments[-1]

    def append(self, dep: Deployment, flow: float, branch: str) -> None:
        self.deployments.append(dep)
        self.flows.append(flow)
        self.branches.append(branch)


def _check_models(method: str, models: Mapping[str, GraphModel]) -> None:
    if method not in steps.METHODS:
        raise InputError(f"unknown method {method!r}; expected one of {', '.join(steps.METHODS)}")
    needed = _REQUIRED_MODEL.get(method)
    if needed and needed not in models:
        raise InputError(f"method {method!r} needs a trained {needed} model")


def run_trajectory(
    method: str,
    models: Mapping[str, GraphModel],
    cfg: ExperimentConfig,
    dep0: Deployment,
    steps_count: Optional[int] = None,
) -> Trajectory:
    _check_models(method, models)
    params = cfg.channel
    zeta = cfg.zeta
    half_width = cfg.half_width if cfg.clamp else None
    total = cfg.steps if steps_count is None else steps_count
    W = endpoint_weights(dep0.n, cfg.wcc_endpoint_factor)

    traj = Trajectory(method)
    dep = dep0
    traj.append(dep, steps.flow_value(params, dep), START)
    for _ in range(total):
        branch = method
        if method == steps.MFL:
            dep = steps.mfl_step(models["mfl"], params, dep, zeta, mode=cfg.mfl_update_mode, half_width=half_width)
        elif method == steps.GL:
            dep = steps.gl_step(models["gl"], params, dep, zeta, half_width=half_width)
        elif method == steps.WCC:
            dep = steps.clamp_relays(wcc_step(params, dep, W, zeta), half_width)
        elif method == steps.HYBRID:
            dep, branch = steps.hybrid_step(
                models["mfl"], params, dep, W, zeta, mode=cfg.mfl_update_mode, half_width=half_width
            )
        else:
            dep = steps.rl_step(models["actor"], params, dep, zeta, half_width=half_width)
        traj.append(dep, steps.flow_value(params, dep), branch)
    return traj


def _run_job(job: Tuple[str, Mapping[str, GraphModel], ExperimentConfig, Deployment]) -> Trajectory:
    method, models, cfg, dep = job
    return run_trajectory(method, models, cfg, dep)


def optimize_deployments(
    method: str,
    models: Mapping[str, GraphModel],
    cfg: ExperimentConfig,
    deployments: Sequence[Tuple[int, Deployment]],
    *,
    workers: int = 1,
) -> List[Tuple[int, Trajectory]]:
    _check_models(method, models)
    jobs = [(method, dict(models), cfg, dep) for _, dep in deployments]
    trajectories = fan_out(_run_job, jobs, workers)
    for (index, _), traj in zip(deployments, trajectories):
        logger.info(
            f"{method}: deployment {index} max-flow {traj.flows[0]:.6g} -> {traj.final_flow:.6g}"
        )
    return [(index, traj) for (index, _), traj in zip(deployments, trajectories)]


def trajectory_records(index: int, traj: Trajectory):
    for step, (dep, flow, branch) in enumerate(zip(traj.deployments, traj.flows, traj.branches)):
        yield {
            "schema": records.SCHEMA_VERSION,
            "deployment": index,
            "method": traj.method,
            "step": step,
            "positions": dep.positions,
            "jammer": dep.jammer,
            "max_flow": flow,
            "branch": branch,
        }


def write_trajectories(path, trajectories: Sequence[Tuple[int, Trajectory]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records.write_records(path, (r for index, traj in trajectories for r in trajectory_records(index, traj)))
    logger.info(f"Wrote {len(trajectories)} trajectories to {path}")


def read_trajectories(path) -> Dict[int, Trajectory]:
    """Trajectories keyed by deployment id; steps must appear in order."""
    out: Dict[int, Trajectory] = {}
    for record in records.iter_records(path):
        records.require(record, "deployment", "method", "step", "max_flow", "branch")
        index = int(record["deployment"])
        traj = out.setdefault(index, Trajectory(record["method"]))
        if record["method"] != traj.method:
            raise RecordError(f"{path}: deployment {index} mixes methods {traj.method} and {record['method']}")
        if int(record["step"]) != len(traj.flows):
            raise RecordError(f"{path}: deployment {index} step {record['step']} is out of order")
        flow = float(record["max_flow"])
        if not np.isfinite(flow):
            raise RecordError(f"{path}: non-finite max-flow")
        traj.append(deployment_from_record(record), flow, record["branch"])
    return out
