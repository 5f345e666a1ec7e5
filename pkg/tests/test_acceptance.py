"""End-to-end runs at desk scale. Run with --runslow; together they take most of an hour."""

import numpy as np
import pytest

from relaynet.datagen import PpoConfig, generate_dataset, read_dataset, train_ppo
from relaynet.harness import ExperimentConfig, sample_deployments
from relaynet.harness.synth import synth_check
from relaynet.harness.training import TrainHyper, predict, train_mfl
from relaynet.optimize import optimize_deployments
from relaynet.utils import seeding

pytestmark = pytest.mark.slow

TRAIN_DEPLOYMENTS = 100
HELD_OUT = 10
TEST_DEPLOYMENTS = 20


@pytest.fixture(scope="module")
def cfg():
    return ExperimentConfig()


@pytest.fixture(scope="module")
def desk_run(cfg, tmp_path_factory):
    """RLGP dataset, an MFL model trained on all but the last deployments, and 20 fresh test deployments."""
    path = tmp_path_factory.mktemp("desk") / "rlgp.jsonl"
    generate_dataset("rlgp", TRAIN_DEPLOYMENTS, cfg, path, seed=0, ppo_cfg=PpoConfig(), workers=4)
    samples = read_dataset(path)
    cut = TRAIN_DEPLOYMENTS - HELD_OUT
    train = [s for s in samples if s.deployment_id < cut]
    held_out = [s for s in samples if s.deployment_id >= cut]
    model = train_mfl(train, cfg.channel, TrainHyper()).model
    test_set = list(enumerate(sample_deployments(cfg, TEST_DEPLOYMENTS, seeding.TEST, 0)))
    return model, held_out, test_set


@pytest.mark.parametrize("function", ["f1", "f2"])
def test_graph_network_learns_a_synthetic_function(function):
    report = synth_check(function, samples=5000, epochs=200, lr=2e-3, test_samples=500)
    assert report.mean_value_error <= 0.02
    assert report.derivative_share_within(0.15) >= 0.9


def test_ppo_reward_improves(cfg):
    scenarios = sample_deployments(cfg, 20, seeding.TRAIN, 0)
    # a window longer than the run keeps it from stopping early
    ppo_cfg = PpoConfig(segment_steps=40, resets=5, max_epochs=50, convergence_window=50)
    result = train_ppo(cfg.channel, scenarios, ppo_cfg, half_width=cfg.half_width)
    assert result.epochs == 50
    assert np.mean(result.epoch_rewards[-10:]) > np.mean(result.epoch_rewards[:10])


def test_wcc_runs_stay_in_the_arena(cfg):
    test_set = list(enumerate(sample_deployments(cfg, 10, seeding.TEST, 0)))
    for _, traj in optimize_deployments("wcc", {}, cfg, test_set, workers=4):
        assert all(np.isfinite(f) and f > 0 for f in traj.flows)
        assert np.all(np.abs(traj.final.relays) <= cfg.half_width)


def test_mfl_predicts_held_out_max_flow(cfg, desk_run):
    model, held_out, _ = desk_run
    truth = np.array([s.max_flow for s in held_out])
    estimates = predict(model, cfg.channel, [s.deployment for s in held_out])
    assert np.median(np.abs(estimates - truth) / truth) <= 0.10


def test_hybrid_improves_and_keeps_up_with_wcc(cfg, desk_run):
    model, _, test_set = desk_run
    hybrid = [traj for _, traj in optimize_deployments("hybrid", {"mfl": model}, cfg, test_set, workers=4)]
    wcc = [traj for _, traj in optimize_deployments("wcc", {}, cfg, test_set, workers=4)]
    improved = sum(traj.final_flow > traj.flows[0] for traj in hybrid)
    assert improved >= 0.8 * TEST_DEPLOYMENTS
    assert np.mean([t.final_flow for t in hybrid]) >= np.mean([t.final_flow for t in wcc])
