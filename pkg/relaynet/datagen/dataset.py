"""Training datasets: relay walks subsampled into labeled snapshots.

Each deployment is walked for ``steps`` moves of length zeta; every
``snapshot_interval`` moves a snapshot is labeled with its exact max-flow and
the unit direction each relay travels next. The last snapshot has no outgoing
move and is flagged invalid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from relaynet.channel import Deployment, adjacency
from relaynet.datagen.ppo import PpoConfig, train_ppo
from relaynet.errors import InputError, RecordError
from relaynet.flow import brute_force_min_cut
from relaynet.harness.scenario import ExperimentConfig, deployment_from_record, sample_deployments
from relaynet.models import ActorModel, build_features
from relaynet.optimize.steps import flow_value, move_relays
from relaynet.spectral import endpoint_weights, lambda2_grad, unit_directions
from relaynet.utils import records, seeding
from relaynet.utils.parallel import fan_out

logger = logging.getLogger(__name__)

RLGP = "rlgp"
RW = "rw"
WCC = "wcc"
STRATEGIES = (RLGP, RW, WCC)


@dataclass(frozen=True)
class TrajectorySample:
    deployment_id: int
    step: int
    deployment: Deployment
    max_flow: float
    directions: np.ndarray  # (n-2) x 2 unit rows, zero when invalid
    valid: bool


def snapshot_count(cfg: ExperimentConfig) -> int:
    return cfg.steps // cfg.snapshot_interval + 1


def _direction(strategy: str, dep: Deployment, cfg: ExperimentConfig, rng, actor, W) -> np.ndarray:
    if strategy == RW:
        angles = rng.uniform(0.0, 2.0 * np.pi, size=dep.n - 2)
        return np.column_stack([np.cos(angles), np.sin(angles)])
    if strategy == WCC:
        return unit_directions(lambda2_grad(cfg.channel, dep, W))
    means, stds = actor.forward(build_features(dep), adjacency(cfg.channel, dep))
    return unit_directions(rng.normal(means.data, stds.data).reshape(-1, 2))


def walk(
    strategy: str,
    index: int,
    dep0: Deployment,
    cfg: ExperimentConfig,
    seed: int,
    actor: Optional[ActorModel] = None,
) -> List[TrajectorySample]:
    """Samples of one deployment's walk; randomness depends only on (seed, index)."""
    if strategy not in STRATEGIES:
        raise InputError(f"unknown dataset strategy {strategy!r}")
    if strategy == RLGP and actor is None:
        raise InputError("the rlgp strategy needs a trained actor")
    rng = seeding.stream(seed, seeding.WALK, index)
    half_width = cfg.half_width if cfg.clamp else None
    W = endpoint_weights(dep0.n, cfg.wcc_endpoint_factor)

    path = [dep0]
    for _ in range(cfg.steps):
        dep = path[-1]
        path.append(move_relays(dep, _direction(strategy, dep, cfg, rng, actor, W), cfg.zeta, half_width))

    samples = []
    for t in range(0, cfg.steps + 1, cfg.snapshot_interval):
        dep = path[t]
        if t < cfg.steps:
            directions = unit_directions(path[t + 1].relays - dep.relays)
            valid = bool(np.all(np.linalg.norm(directions, axis=1) > 0))
        else:
            directions = np.zeros_like(dep.relays)
            valid = False
        samples.append(TrajectorySample(index, t, dep, flow_value(cfg.channel, dep), directions, valid))
    return samples


def _walk_job(job) -> List[TrajectorySample]:
    return walk(*job)


def sample_record(strategy: str, s: TrajectorySample) -> Dict:
    return {
        "schema": records.SCHEMA_VERSION,
        "strategy": strategy,
        "deployment": s.deployment_id,
        "step": s.step,
        "jammer": s.deployment.jammer,
        "positions": s.deployment.positions,
        "max_flow": s.max_flow,
        "directions": s.directions,
        "valid": s.valid,
    }


def sample_from_record(record: Dict) -> TrajectorySample:
    records.require(record, "deployment", "step", "max_flow", "directions", "valid")
    dep = deployment_from_record(record)
    directions = np.array(record["directions"], dtype=np.float64).reshape(-1, 2)
    if directions.shape[0] != dep.n - 2:
        raise RecordError(f"sample has {directions.shape[0]} direction rows for {dep.n - 2} relays")
    return TrajectorySample(
        int(record["deployment"]), int(record["step"]), dep, float(record["max_flow"]), directions, bool(record["valid"])
    )


def read_dataset(path) -> List[TrajectorySample]:
    return [sample_from_record(r) for r in records.iter_records(path)]


def _complete_prefix(path: Path, per_deployment: int) -> Tuple[int, List[Dict]]:
    """Number of fully written deployments at the head of ``path`` and their records."""
    kept: List[Dict] = []
    done = 0
    group: List[Dict] = []
    for record in records.iter_records(path):
        records.require(record, "deployment")
        if int(record["deployment"]) != done:
            break
        group.append(record)
        if len(group) == per_deployment:
            kept.extend(group)
            group = []
            done += 1
    return done, kept


def generate_dataset(
    strategy: str,
    count: int,
    cfg: ExperimentConfig,
    out,
    seed: int,
    *,
    ppo_cfg: Optional[PpoConfig] = None,
    actor: Optional[ActorModel] = None,
    workers: int = 1,
    resume: bool = False,
) -> int:
    """Write ``count`` deployments' samples to ``out``; returns the number of samples written in total.

    With ``resume`` the fully written deployments already in ``out`` are kept and
    a partially written trailing deployment is regenerated.
    """
    if strategy not in STRATEGIES:
        raise InputError(f"unknown dataset strategy {strategy!r}; expected one of {', '.join(STRATEGIES)}")
    deployments = sample_deployments(cfg, count, seeding.TRAIN, seed)
    if strategy == RLGP and actor is None:
        if ppo_cfg is None:
            raise InputError("rlgp generation needs a PPO configuration or a trained actor")
        logger.info(f"Training the PPO explorer on {count} deployments")
        actor = train_ppo(cfg.channel, deployments, ppo_cfg, half_width=cfg.half_width if cfg.clamp else None).actor

    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    per_deployment = snapshot_count(cfg)
    done = 0
    if resume and out.exists():
        done, kept = _complete_prefix(out, per_deployment)
        records.write_records(out, kept)
        logger.info(f"Resuming {strategy} dataset at deployment {done} of {count}")
    else:
        records.write_records(out, [])

    todo = [(strategy, i, deployments[i], cfg, seed, actor) for i in range(done, count)]
    step = max(1, workers)
    for start in range(0, len(todo), step):
        chunk = todo[start:start + step]
        for samples in fan_out(_walk_job, chunk, workers):
            records.write_records(out, (sample_record(strategy, s) for s in samples), append=True)
            logger.info(f"{strategy}: wrote deployment {samples[0].deployment_id} ({len(samples)} samples)")
    return count * per_deployment


def audit_labels(
    samples: Sequence[TrajectorySample], cfg: ExperimentConfig, *, fraction: float = 0.01, seed: int = 0, tol: float = 1e-9
) -> int:
    """Recheck a random subset of labels by exhaustive min-cut; returns how many were checked."""
    if not samples:
        return 0
    rng = seeding.stream(seed, seeding.AUDIT)
    k = max(1, int(round(fraction * len(samples))))
    for i in rng.choice(len(samples), size=min(k, len(samples)), replace=False):
        s = samples[int(i)]
        dep = s.deployment
        exact = brute_force_min_cut(adjacency(cfg.channel, dep), dep.source_index, dep.dest_index).value
        if abs(exact - s.max_flow) > tol * max(1.0, abs(exact)):
            raise RecordError(
                f"deployment {s.deployment_id} step {s.step}: label {s.max_flow!r} differs from min-cut {exact!r}"
            )
    return min(k, len(samples))
