"""Supervised training of the max-flow regressor and the direction predictor."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from relaynet.channel import ChannelParams, Deployment
from relaynet.datagen.dataset import TrajectorySample
from relaynet.datagen.ppo import PpoConfig, train_ppo
from relaynet.errors import InputError, NonFiniteError
from relaynet.models import GlModel, GraphModel, MflModel, stack_inputs
from relaynet.nn import AdamState, Tape, adam_step, losses
from relaynet.utils import seeding

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainHyper:
    lr: float = 2e-4
    epochs: int = 200
    batch_size: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0 or self.epochs < 0 or self.batch_size < 1:
            raise InputError("learning rate, epochs and batch size must be positive")

    @classmethod
    def from_config(cls, config: Mapping[str, Any], kind: str, **overrides) -> "TrainHyper":
        prefix = {"mfl": "MFL", "gl": "GL", "synth": "SYNTH"}[kind]
        values = dict(
            lr=config[f"{prefix}_LR"],
            epochs=config[f"{prefix}_EPOCHS"],
            batch_size=config["BATCH_SIZE"],
            seed=config["SEED"],
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass
class TrainResult:
    model: GraphModel
    losses: List[float] = field(default_factory=list)


LossFn = Callable[[Any, np.ndarray], Any]


def fit(
    model: GraphModel,
    X: np.ndarray,
    A: np.ndarray,
    targets: np.ndarray,
    loss_fn: LossFn,
    hyper: TrainHyper,
    *,
    label: str = "model",
) -> TrainResult:
    """Adam on minibatches of stacked graphs; returns the model and per-epoch mean losses."""
    if len(X) == 0:
        raise InputError(f"no training samples for {label}")
    state = AdamState(lr=hyper.lr)
    result = TrainResult(model)
    for epoch in range(hyper.epochs):
        order = seeding.stream(hyper.seed, seeding.SHUFFLE, epoch).permutation(len(X))
        epoch_losses = []
        for start in range(0, len(X), hyper.batch_size):
            idx = order[start:start + hyper.batch_size]
            tape = Tape()
            out = result.model.forward(X[idx], A[idx], tape)
            loss = loss_fn(out, targets[idx])
            value = loss.item()
            if not math.isfinite(value):
                raise NonFiniteError(f"{label}: non-finite loss at epoch {epoch}")
            grads = tape.backward(loss).params()
            result.model = result.model.with_params(adam_step(result.model.params, grads, state))
            epoch_losses.append(value * len(idx))
        result.losses.append(float(sum(epoch_losses)) / len(X))
        if epoch % 10 == 0 or epoch == hyper.epochs - 1:
            logger.info(f"{label} epoch {epoch}: loss {result.losses[-1]:.6g}")
    return result


def _inputs(params: ChannelParams, samples: Sequence[TrajectorySample]) -> Tuple[np.ndarray, np.ndarray]:
    if not samples:
        raise InputError("no training samples")
    sizes = {s.deployment.n for s in samples}
    if len(sizes) > 1:
        raise InputError(f"training samples mix node counts {sorted(sizes)}")
    return stack_inputs(params, [s.deployment for s in samples])


def train_mfl(
    samples: Sequence[TrajectorySample],
    params: ChannelParams,
    hyper: TrainHyper,
    model: Optional[GraphModel] = None,
) -> TrainResult:
    """Fit the scalar output to the max-flow labels with MSE. Any GraphModel with a scalar head works."""
    model = model or MflModel.initialize(seeding.stream(hyper.seed, seeding.INIT, 0))
    X, A = _inputs(params, samples)
    y = np.array([s.max_flow for s in samples])
    logger.info(f"Training {model.architecture} on {len(samples)} samples for {hyper.epochs} epochs")
    return fit(model, X, A, y, losses.mse, hyper, label=model.architecture)


def train_gl(
    samples: Sequence[TrajectorySample],
    params: ChannelParams,
    hyper: TrainHyper,
    model: Optional[GlModel] = None,
) -> TrainResult:
    """Fit the relay rows to the unit-direction labels; invalid samples are skipped."""
    model = model or GlModel.initialize(seeding.stream(hyper.seed, seeding.INIT, 1))
    usable = [s for s in samples if s.valid]
    logger.info(f"Training gl on {len(usable)} of {len(samples)} samples for {hyper.epochs} epochs")
    X, A = _inputs(params, usable)
    Y = np.stack([s.directions for s in usable])
    return fit(model, X, A, Y, losses.frobenius_mse, hyper, label="gl")


def predict(model: GraphModel, params: ChannelParams, deployments: Sequence[Deployment]) -> np.ndarray:
    X, A = stack_inputs(params, deployments)
    return model.forward(X, A).data


def train_rl_baseline(
    test_set: Sequence[Deployment], params: ChannelParams, ppo_cfg: PpoConfig, *, half_width: Optional[float] = None
):
    """PPO trained directly on the test deployments; its actor's mean move is the RL baseline."""
    logger.info(f"Training the RL baseline on {len(test_set)} test deployments for up to {ppo_cfg.max_epochs} epochs")
    return train_ppo(params, test_set, ppo_cfg, half_width=half_width)
