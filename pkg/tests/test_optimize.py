import numpy as np
import pytest

from conftest import random_deployment
from oracle import brute_force_min_cut, finite_diff, rel_error
from relaynet.channel import Deployment, adjacency
from relaynet.errors import InputError, NonFiniteError, RecordError
from relaynet.harness import ExperimentConfig
from relaynet.models import ActorModel, GlModel, MflModel, build_features, mfl_forward
from relaynet.optimize import (
    clamp_relays,
    flow_value,
    gl_step,
    hybrid_step,
    mfl_gradient,
    mfl_step,
    optimize_deployments,
    read_trajectories,
    rl_step,
    run_trajectory,
    write_trajectories,
)
from relaynet.optimize.steps import move_relays
from relaynet.spectral import endpoint_weights, wcc_step
from relaynet.utils import records

ZETA = 0.02


@pytest.fixture(scope="module")
def models():
    rng = np.random.default_rng(11)
    return {"mfl": MflModel.initialize(rng), "gl": GlModel.initialize(rng), "actor": ActorModel.initialize(rng)}


@pytest.fixture
def cfg():
    return ExperimentConfig(steps=5)


def relay_steps(before, after):
    return np.linalg.norm(after.relays - before.relays, axis=1)


def test_flow_value_is_the_exact_min_cut(params, layout, rng):
    for dep in [layout] + [random_deployment(rng) for _ in range(5)]:
        exact = brute_force_min_cut(adjacency(params, dep), 0, dep.n - 1).value
        assert flow_value(params, dep) == pytest.approx(exact, abs=1e-9)


def test_mfl_gradient_matches_the_composed_map(models, params, layout, rng):
    model = models["mfl"]
    for dep in [layout] + [random_deployment(rng) for _ in range(3)]:

        def g(relays, dep=dep):
            moved = dep.with_relays(relays)
            return mfl_forward(model, build_features(moved), adjacency(params, moved))

        assert rel_error(mfl_gradient(model, params, dep), finite_diff(g, dep.relays, 1e-6)) < 1e-4


def test_mfl_step_zero_is_identity(models, params, layout):
    assert mfl_step(models["mfl"], params, layout, 0.0).same_as(layout)


def test_mfl_step_moves_relays_by_zeta(models, params, rng):
    dep = random_deployment(rng)
    moved = mfl_step(models["mfl"], params, dep, ZETA)
    np.testing.assert_array_equal(moved.positions[[0, -1]], dep.positions[[0, -1]])
    np.testing.assert_allclose(relay_steps(dep, moved), ZETA, rtol=0, atol=1e-12)


def test_mfl_sign_mode_moves_along_the_axes(models, params, rng):
    dep = random_deployment(rng)
    moved = mfl_step(models["mfl"], params, dep, ZETA, mode="sign")
    np.testing.assert_allclose(np.abs(moved.relays - dep.relays), ZETA, rtol=0, atol=1e-12)


def test_mfl_step_rejects_unknown_mode(models, params, layout):
    with pytest.raises(InputError):
        mfl_step(models["mfl"], params, layout, ZETA, mode="diagonal")


def test_gl_step(models, params, layout, rng):
    assert gl_step(models["gl"], params, layout, 0.0).same_as(layout)
    dep = random_deployment(rng)
    moved = gl_step(models["gl"], params, dep, ZETA)
    np.testing.assert_allclose(relay_steps(dep, moved), ZETA, rtol=0, atol=1e-12)


def test_gl_moves_follow_relay_order(models, params, rng):
    dep = random_deployment(rng)
    perm = rng.permutation(4)
    permuted = dep.with_relays(dep.relays[perm])
    moves = gl_step(models["gl"], params, dep, ZETA).relays - dep.relays
    moves_p = gl_step(models["gl"], params, permuted, ZETA).relays - permuted.relays
    np.testing.assert_allclose(moves_p, moves[perm], rtol=0, atol=1e-10)


def test_hybrid_takes_the_better_branch(models, params, rng):
    W = endpoint_weights(6)
    for _ in range(5):
        dep = random_deployment(rng)
        via_mfl = flow_value(params, mfl_step(models["mfl"], params, dep, ZETA))
        via_wcc = flow_value(params, wcc_step(params, dep, W, ZETA))
        chosen, tag = hybrid_step(models["mfl"], params, dep, W, ZETA)
        assert flow_value(params, chosen) == max(via_mfl, via_wcc)
        assert tag == ("mfl" if via_mfl >= via_wcc else "wcc")


def test_hybrid_falls_back_when_wcc_is_degenerate(models, params):
    angles = np.arange(6) * np.pi / 3
    dep = Deployment(1.2 * np.column_stack([np.cos(angles), np.sin(angles)]), (0.0, 0.0))
    moved, tag = hybrid_step(models["mfl"], params, dep, np.ones(6), ZETA)
    assert tag == "mfl"
    assert moved.same_as(mfl_step(models["mfl"], params, dep, ZETA))


def test_rl_step_uses_the_mean_action(models, params, layout):
    moved = rl_step(models["actor"], params, layout, ZETA)
    again = rl_step(models["actor"], params, layout, ZETA)
    assert moved.same_as(again)
    np.testing.assert_allclose(relay_steps(layout, moved), ZETA, rtol=0, atol=1e-12)


def test_clamping_keeps_relays_in_the_arena(layout):
    dep = layout.with_relays(np.array([[7.0, 0.0], [0.0, -9.0], [1.0, 1.0], [-6.5, 6.5]]))
    clamped = clamp_relays(dep, 6.0)
    np.testing.assert_array_equal(clamped.relays, [[6.0, 0.0], [0.0, -6.0], [1.0, 1.0], [-6.0, 6.0]])
    assert clamp_relays(dep, None) is dep


def test_clamped_relays_move_less_than_zeta(layout):
    dep = layout.with_relays(np.array([[5.99, 0.0], [0.0, -5.995], [1.0, 1.0], [-6.0, 2.0]]))
    directions = np.array([[1.0, 0.0], [0.0, -1.0], [0.6, 0.8], [-1.0, 0.0]])
    moved = move_relays(dep, directions, ZETA, 6.0)
    np.testing.assert_allclose(np.linalg.norm(moved.relays - dep.relays, axis=1), [0.01, 0.005, ZETA, 0.0], atol=1e-12)
    assert np.all(np.abs(moved.relays) <= 6.0)
    unclamped = move_relays(dep, directions, ZETA)
    np.testing.assert_allclose(np.linalg.norm(unclamped.relays - dep.relays, axis=1), ZETA, atol=1e-12)


def test_non_finite_moves_abort(layout):
    with pytest.raises(NonFiniteError):
        move_relays(layout, np.full((4, 2), np.inf), ZETA)


def test_zero_step_trajectory(models, cfg, params, layout):
    traj = run_trajectory("wcc", models, cfg, layout, steps_count=0)
    assert len(traj.deployments) == 1
    assert traj.final_flow == flow_value(params, layout)


@pytest.mark.parametrize("method", ["mfl", "gl", "wcc", "hybrid", "rl"])
def test_trajectories_move_only_relays(models, cfg, params, layout, method):
    traj = run_trajectory(method, models, cfg, layout)
    assert len(traj.deployments) == cfg.steps + 1
    assert traj.branches[0] == "start"
    for before, after, flow in zip(traj.deployments, traj.deployments[1:], traj.flows[1:]):
        np.testing.assert_array_equal(after.positions[[0, -1]], layout.positions[[0, -1]])
        np.testing.assert_array_equal(after.jammer, layout.jammer)
        steps = relay_steps(before, after)
        assert np.all((np.abs(steps - ZETA) < 1e-12) | (steps == 0.0))
        assert flow == flow_value(params, after)


def test_hybrid_trajectory_dominates_each_branch(models, cfg, params, layout):
    traj = run_trajectory("hybrid", models, cfg, layout)
    W = endpoint_weights(6)
    for before, flow in zip(traj.deployments, traj.flows[1:]):
        via_mfl = flow_value(params, clamp_relays(mfl_step(models["mfl"], params, before, ZETA), 6.0))
        via_wcc = flow_value(params, clamp_relays(wcc_step(params, before, W, ZETA), 6.0))
        assert flow == max(via_mfl, via_wcc)


def test_trajectories_are_deterministic(models, cfg, layout):
    a = run_trajectory("hybrid", models, cfg, layout)
    b = run_trajectory("hybrid", models, cfg, layout)
    assert a.branches == b.branches
    assert a.flows == b.flows


def test_missing_model_or_method(models, cfg, layout):
    with pytest.raises(InputError):
        run_trajectory("gl", {"mfl": models["mfl"]}, cfg, layout)
    with pytest.raises(InputError):
        run_trajectory("annealing", models, cfg, layout)


def test_trajectory_files_round_trip(models, cfg, layout, rng, tmp_path):
    deployments = [(0, layout), (1, layout.with_relays(layout.relays + 0.1))]
    trajectories = optimize_deployments("wcc", models, cfg, deployments)
    assert [i for i, _ in trajectories] == [0, 1]
    path = tmp_path / "wcc.jsonl"
    write_trajectories(path, trajectories)
    loaded = read_trajectories(path)
    assert sorted(loaded) == [0, 1]
    for index, traj in trajectories:
        assert loaded[index].method == "wcc"
        assert loaded[index].flows == traj.flows
        assert loaded[index].branches == traj.branches
        for a, b in zip(loaded[index].deployments, traj.deployments):
            assert a.same_as(b)


def test_trajectory_files_must_be_ordered(models, cfg, layout, tmp_path):
    path = tmp_path / "wcc.jsonl"
    write_trajectories(path, optimize_deployments("wcc", models, cfg, [(0, layout)]))
    lines = path.read_text().splitlines()
    path.write_text("\n".join([lines[1], lines[0]] + lines[2:]) + "\n")
    with pytest.raises(RecordError):
        read_trajectories(path)

    rows = records.read_records(path)
    rows.sort(key=lambda r: r["step"])
    rows[3]["method"] = "mfl"
    records.write_records(path, rows)
    with pytest.raises(RecordError):
        read_trajectories(path)
