"""Clipped-ratio PPO with a graph actor and a graph critic.

One epoch fills a buffer of T = segment_steps * resets transitions (the state
returns to the scenario start every ``segment_steps``), estimates one-step
advantages with the current critic, then runs ``inner_epochs`` passes of
minibatch updates on both networks with the advantages held fixed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from relaynet.channel import ChannelParams, Deployment
from relaynet.datagen.env import RelayEnv
from relaynet.errors import InputError, NonFiniteError
from relaynet.models import ActorModel, CriticModel
from relaynet.nn import AdamState, Tape, adam_step
from relaynet.nn import functional as F
from relaynet.nn import losses
from relaynet.utils import seeding

logger = logging.getLogger(__name__)

LOG_RATIO_LIMIT = 20.0


@dataclass(frozen=True)
class PpoConfig:
    gamma: float = 0.9
    tau: float = 0.2
    segment_steps: int = 40
    resets: int = 5
    inner_epochs: int = 10
    max_epochs: int = 50
    zeta: float = 0.02
    actor_lr: float = 4e-4
    critic_lr: float = 1e-4
    batch_size: int = 100
    convergence_window: int = 20
    convergence_tol: float = 0.01
    seed: int = 0

    def __post_init__(self):
        for name in ("segment_steps", "resets", "inner_epochs", "max_epochs", "batch_size", "convergence_window"):
            if getattr(self, name) < 1:
                raise InputError(f"PPO setting {name} must be positive")
        if not 0.0 <= self.gamma <= 1.0 or self.tau <= 0:
            raise InputError("PPO needs 0 <= gamma <= 1 and tau > 0")

    @property
    def horizon(self) -> int:
        return self.segment_steps * self.resets

    @classmethod
    def from_config(cls, config: Mapping[str, Any], **overrides) -> "PpoConfig":
        values = dict(
            gamma=config["PPO_GAMMA"],
            tau=config["PPO_TAU"],
            segment_steps=config["PPO_SEGMENT_STEPS"],
            resets=config["PPO_RESETS"],
            inner_epochs=config["PPO_INNER_EPOCHS"],
            max_epochs=config["PPO_MAX_EPOCHS"],
            zeta=config["STEP_SIZE"],
            actor_lr=config["PPO_ACTOR_LR"],
            critic_lr=config["PPO_CRITIC_LR"],
            batch_size=config["PPO_BATCH_SIZE"],
            convergence_window=config["PPO_CONVERGENCE_WINDOW"],
            convergence_tol=config["PPO_CONVERGENCE_TOL"],
            seed=config["SEED"],
        )
        values.update(overrides)
        return cls(**values)


@dataclass
class BufferEntry:
    X: np.ndarray
    A: np.ndarray
    next_X: np.ndarray
    next_A: np.ndarray
    action: np.ndarray  # raw sample, (n-2) x 2
    reward: float
    log_prob: float
    advantage: float = 0.0
    target: float = 0.0
    reset_after: bool = False


@dataclass
class PpoResult:
    actor: ActorModel
    critic: CriticModel
    epoch_rewards: List[float] = field(default_factory=list)
    converged: bool = False

    @property
    def epochs(self) -> int:
        return len(self.epoch_rewards)


def gaussian_log_density(action, mean, std) -> float:
    """log of the product of independent normals N(a_k; mu_k, sigma_k)."""
    a = np.asarray(action, dtype=np.float64).reshape(-1)
    mu = np.asarray(mean, dtype=np.float64).reshape(-1)
    sigma = np.asarray(std, dtype=np.float64).reshape(-1)
    # same formula the minibatch update evaluates, so fresh ratios are 1
    return float(F.log_normal_density(a, mu, sigma).data)


def clip(a, b, c, d):
    """min(a, c) * d when d > 0, else max(a, b) * d."""
    a, d = np.asarray(a, dtype=np.float64), np.asarray(d, dtype=np.float64)
    out = np.where(d > 0, np.minimum(a, c) * d, np.maximum(a, b) * d)
    return float(out) if out.ndim == 0 else out


def surrogate(ratio, advantage, tau: float):
    """Per-sample clipped objective min(rho A, clip(rho, 1 - tau, 1 + tau, A))."""
    ratio, advantage = np.asarray(ratio, dtype=np.float64), np.asarray(advantage, dtype=np.float64)
    return np.minimum(ratio * advantage, clip(ratio, 1.0 - tau, 1.0 + tau, advantage))


def _stack(entries: Sequence[BufferEntry], attr: str) -> np.ndarray:
    return np.stack([getattr(e, attr) for e in entries])


def ppo_rollout_epoch(
    actor: ActorModel, critic: CriticModel, env: RelayEnv, cfg: PpoConfig, rng: np.random.Generator
) -> List[BufferEntry]:
    """Fill a buffer of ``cfg.horizon`` transitions starting from the env's current scenario."""
    buffer: List[BufferEntry] = []
    env.reset()
    for t in range(1, cfg.horizon + 1):
        X, A = env.observe()
        means, stds = actor.forward(X, A)
        means, stds = means.data, stds.data
        if not (np.all(np.isfinite(means)) and np.all(np.isfinite(stds))):
            raise NonFiniteError(f"actor produced non-finite outputs at step {t}")
        action = rng.normal(means, stds).reshape(-1, 2)
        log_prob = gaussian_log_density(action, means, stds)
        nxt, reward = env.step(action)
        next_X, next_A = env.observe(nxt)
        reset = t % cfg.segment_steps == 0
        buffer.append(BufferEntry(X, A, next_X, next_A, action, reward, log_prob, reset_after=reset))
        if reset:
            env.reset()

    values = critic.forward(_stack(buffer, "X"), _stack(buffer, "A")).data
    next_values = critic.forward(_stack(buffer, "next_X"), _stack(buffer, "next_A")).data
    for entry, v, v_next in zip(buffer, values, next_values):
        entry.target = entry.reward + cfg.gamma * float(v_next)
        entry.advantage = entry.target - float(v)
    return buffer


def _ratios(log_prob: np.ndarray, batch: Sequence[BufferEntry]) -> Tuple[np.ndarray, np.ndarray]:
    log_ratio = log_prob - np.array([e.log_prob for e in batch])
    inside = np.abs(log_ratio) < LOG_RATIO_LIMIT
    return np.exp(np.clip(log_ratio, -LOG_RATIO_LIMIT, LOG_RATIO_LIMIT)), inside


def _batch_log_prob(actor: ActorModel, batch: Sequence[BufferEntry], tape: Optional[Tape] = None):
    means, stds = actor.forward(_stack(batch, "X"), _stack(batch, "A"), tape)
    actions = _stack(batch, "action").reshape(len(batch), -1)
    return F.log_normal_density(actions, means, stds)


def importance_ratios(actor: ActorModel, batch: Sequence[BufferEntry]) -> np.ndarray:
    """pi_theta(a_t | s_t) / pi_old(a_t | s_t) for every buffered transition."""
    ratio, _ = _ratios(_batch_log_prob(actor, batch).data, batch)
    return ratio


def actor_objective(actor: ActorModel, batch: Sequence[BufferEntry], tau: float) -> float:
    adv = np.array([e.advantage for e in batch])
    return float(surrogate(importance_ratios(actor, batch), adv, tau).mean())


def actor_gradient(actor: ActorModel, batch: Sequence[BufferEntry], tau: float):
    """Mean clipped objective and the gradient of its negative over the actor parameters."""
    tape = Tape()
    log_prob = _batch_log_prob(actor, batch, tape)
    adv = np.array([e.advantage for e in batch])
    ratio, inside = _ratios(log_prob.data, batch)
    objective = surrogate(ratio, adv, tau)
    # d objective / d rho is A where the unclipped term is the active one, else 0
    unclipped = ratio * adv <= clip(ratio, 1.0 - tau, 1.0 + tau, adv)
    d_log_prob = np.where(unclipped & inside, adv * ratio, 0.0) / len(batch)
    grads = tape.backward(log_prob, [-d_log_prob])
    return float(objective.mean()), grads.params()


def _critic_minibatch(critic: CriticModel, batch: Sequence[BufferEntry]):
    tape = Tape()
    values = critic.forward(_stack(batch, "X"), _stack(batch, "A"), tape)
    targets = np.array([e.target for e in batch])
    loss = losses.huber(F.sub(values, targets))
    grads = tape.backward(loss)
    return loss.item(), grads.params()


def ppo_update(
    actor: ActorModel,
    critic: CriticModel,
    buffer: Sequence[BufferEntry],
    cfg: PpoConfig,
    rng: np.random.Generator,
    actor_state: Optional[AdamState] = None,
    critic_state: Optional[AdamState] = None,
) -> Tuple[ActorModel, CriticModel]:
    if not buffer:
        raise InputError("PPO update needs a non-empty buffer")
    actor_state = actor_state or AdamState(lr=cfg.actor_lr)
    critic_state = critic_state or AdamState(lr=cfg.critic_lr)
    for inner in range(cfg.inner_epochs):
        order = rng.permutation(len(buffer))
        for start in range(0, len(buffer), cfg.batch_size):
            batch = [buffer[i] for i in order[start:start + cfg.batch_size]]
            objective, actor_grads = actor_gradient(actor, batch, cfg.tau)
            critic_loss, critic_grads = _critic_minibatch(critic, batch)
            if not (math.isfinite(objective) and math.isfinite(critic_loss)):
                raise NonFiniteError(
                    f"PPO inner epoch {inner}: actor objective {objective}, critic loss {critic_loss}"
                )
            actor = actor.with_params(adam_step(actor.params, actor_grads, actor_state))
            critic = critic.with_params(adam_step(critic.params, critic_grads, critic_state))
    return actor, critic


def reward_converged(rewards: Sequence[float], window: int, tol: float) -> bool:
    """Relative change between the last two ``window``-epoch reward averages is below ``tol``."""
    if len(rewards) < 2 * window:
        return False
    recent = float(np.mean(rewards[-window:]))
    before = float(np.mean(rewards[-2 * window:-window]))
    return abs(recent - before) <= tol * max(abs(before), 1e-12)


def train_ppo(
    params: ChannelParams,
    scenarios: Sequence[Deployment],
    cfg: PpoConfig,
    *,
    half_width: Optional[float] = None,
) -> PpoResult:
    """Train actor and critic, one scenario per epoch in turn, until the reward settles."""
    actor = ActorModel.initialize(seeding.stream(cfg.seed, seeding.INIT, 0))
    critic = CriticModel.initialize(seeding.stream(cfg.seed, seeding.INIT, 1))
    env = RelayEnv(params, scenarios, cfg.zeta, half_width)
    actor_state = AdamState(lr=cfg.actor_lr)
    critic_state = AdamState(lr=cfg.critic_lr)
    result = PpoResult(actor, critic)

    for epoch in range(cfg.max_epochs):
        rng = seeding.stream(cfg.seed, seeding.POLICY, epoch)
        env.select(epoch)
        buffer = ppo_rollout_epoch(result.actor, result.critic, env, cfg, rng)
        # mean max-flow gain per segment
        reward = float(sum(e.reward for e in buffer)) / cfg.resets
        result.epoch_rewards.append(reward)
        result.actor, result.critic = ppo_update(
            result.actor, result.critic, buffer, cfg, rng, actor_state, critic_state
        )
        logger.info(f"PPO epoch {epoch}: scenario {env.scenario_index}, segment gain {reward:.6g}")
        if reward_converged(result.epoch_rewards, cfg.convergence_window, cfg.convergence_tol):
            result.converged = True
            logger.info(f"PPO reward converged after {epoch + 1} epochs")
            break
    return result
