import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from conftest import random_deployment
from oracle import finite_diff, rel_error
from relaynet.errors import CheckpointError, ShapeError
from relaynet.harness.ablation import FirstOrderMflModel
from relaynet.harness.synth import SynthModel
from relaynet.models import (
    ActorModel,
    CriticModel,
    GlModel,
    MflModel,
    actor_forward,
    build_features,
    critic_forward,
    gl_forward,
    graph_inputs,
    load_checkpoint,
    mfl_forward,
    save_checkpoint,
    stack_inputs,
)
from relaynet.nn import Tape, grad_wrt_inputs
from relaynet.spectral import unit_directions

PERMUTATIONS = 100
ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="module")
def models():
    rng = np.random.default_rng(7)
    return {cls.architecture: cls.initialize(rng) for cls in (MflModel, GlModel, ActorModel, CriticModel)}


def relay_permutation(rng, n):
    return np.concatenate([[0], 1 + rng.permutation(n - 2), [n - 1]])


def test_features_flag_the_endpoints(layout):
    X = build_features(layout)
    assert X.shape == (6, 3)
    np.testing.assert_array_equal(X[:, 0], [1, 0, 0, 0, 0, 1])
    np.testing.assert_array_equal(X[:, 1:], layout.positions)


def test_layer_shapes(models):
    assert models["mfl"].params["conv1.root"].shape == (3, 32)
    assert models["mfl"].params["lin2.weight"].shape == (32, 1)
    assert models["gl"].params["lin2.weight"].shape == (32, 2)
    assert models["actor"].params["mean.weight"].shape == (128, 8)
    assert models["actor"].params["std.weight"].shape == (128, 8)
    assert models["critic"].params["lin.weight"].shape == (32, 1)


def test_parameters_are_read_only(models):
    with pytest.raises(ValueError):
        models["mfl"].params["lin1.bias"][0] = 1.0


def test_outputs_have_the_documented_shapes(models, params, layout):
    X, A = graph_inputs(params, layout)
    assert np.isfinite(mfl_forward(models["mfl"], X, A))
    assert gl_forward(models["gl"], X, A).shape == (4, 2)
    means, stds = actor_forward(models["actor"], X, A)
    assert means.shape == stds.shape == (8,)
    assert np.isfinite(critic_forward(models["critic"], X, A))


def test_actor_ranges(models, params, rng):
    for _ in range(10):
        means, stds = actor_forward(models["actor"], *graph_inputs(params, random_deployment(rng)))
        assert np.all(np.abs(means) < 1.0)
        assert np.all(stds > 0.0)


def test_actor_needs_six_nodes(models, params, rng):
    with pytest.raises(ShapeError):
        actor_forward(models["actor"], *graph_inputs(params, random_deployment(rng, n=5)))


def test_typed_forwards_check_the_architecture(models, params, layout):
    with pytest.raises(ShapeError):
        mfl_forward(models["critic"], *graph_inputs(params, layout))


def test_forward_rejects_bad_shapes(models):
    with pytest.raises(ShapeError):
        models["mfl"].forward(np.zeros((6, 2)), np.zeros((6, 6)))
    with pytest.raises(ShapeError):
        models["mfl"].forward(np.zeros((6, 3)), np.zeros((5, 5)))


@pytest.mark.parametrize("name", ["mfl", "critic"])
def test_scalar_models_are_invariant_to_relay_order(models, params, rng, name):
    model = models[name]
    X, A = graph_inputs(params, random_deployment(rng))
    ref = model.forward(X, A).item()
    for _ in range(PERMUTATIONS):
        p = relay_permutation(rng, 6)
        assert abs(model.forward(X[p], A[np.ix_(p, p)]).item() - ref) <= 1e-10 * max(1.0, abs(ref))


def test_actor_is_invariant_to_relay_order(models, params, rng):
    X, A = graph_inputs(params, random_deployment(rng))
    means, stds = actor_forward(models["actor"], X, A)
    for _ in range(PERMUTATIONS):
        p = relay_permutation(rng, 6)
        means_p, stds_p = actor_forward(models["actor"], X[p], A[np.ix_(p, p)])
        np.testing.assert_allclose(means_p, means, rtol=0, atol=1e-10)
        np.testing.assert_allclose(stds_p, stds, rtol=0, atol=1e-10)


def test_gl_is_equivariant_over_relays(models, params, rng):
    X, A = graph_inputs(params, random_deployment(rng))
    out = gl_forward(models["gl"], X, A)
    for _ in range(PERMUTATIONS):
        p = relay_permutation(rng, 6)
        out_p = gl_forward(models["gl"], X[p], A[np.ix_(p, p)])
        np.testing.assert_allclose(out_p, out[p[1:-1] - 1], rtol=0, atol=1e-10)


def test_gl_directions_are_unit_rows(models, params, layout):
    U = unit_directions(gl_forward(models["gl"], *graph_inputs(params, layout)))
    np.testing.assert_allclose(np.linalg.norm(U, axis=1), 1.0, rtol=0, atol=1e-12)
    np.testing.assert_array_equal(unit_directions(np.zeros((2, 2))), np.zeros((2, 2)))


def test_batched_forward_matches_single_graphs(models, params, rng):
    deps = [random_deployment(rng) for _ in range(4)]
    X, A = stack_inputs(params, deps)
    batched = models["mfl"].forward(X, A).data
    singles = [mfl_forward(models["mfl"], X[b], A[b]) for b in range(4)]
    np.testing.assert_allclose(batched, singles, rtol=1e-13, atol=1e-13)
    means, _ = models["actor"].forward(X, A)
    np.testing.assert_allclose(means.data[2], actor_forward(models["actor"], X[2], A[2])[0], rtol=1e-13, atol=1e-13)


def _weighted_output(model, X, A, R):
    out = model.forward(X, A)
    if isinstance(out, tuple):
        return sum(float(np.sum(r * o.data)) for r, o in zip(R, out))
    return float(np.sum(R[0] * out.data))


@pytest.mark.parametrize("name", ["mfl", "gl", "actor", "critic"])
def test_input_gradients_match_finite_differences(models, params, rng, name):
    model = models[name]
    for _ in range(50):
        X0, A0 = graph_inputs(params, random_deployment(rng))
        tape = Tape()
        X, A = tape.input("X", X0), tape.input("A", A0)
        out = model.forward(X, A)
        outs = out if isinstance(out, tuple) else (out,)
        R = [rng.normal(size=o.shape) for o in outs]
        grads = tape.backward(list(outs), R)
        fd_X = finite_diff(lambda x: _weighted_output(model, x, A0, R), X0)
        fd_A = finite_diff(lambda a: _weighted_output(model, X0, a, R), A0)
        assert rel_error(grads[X], fd_X) < 1e-4
        assert rel_error(grads[A], fd_A) < 1e-4


def test_mfl_grad_wrt_inputs(models, params, layout):
    X0, A0 = graph_inputs(params, layout)
    tape = Tape()
    out = models["mfl"].forward(tape.input("X", X0), tape.input("A", A0))
    dX, dA = grad_wrt_inputs(tape, out)
    assert rel_error(dX, finite_diff(lambda x: mfl_forward(models["mfl"], x, A0), X0)) < 1e-4
    assert rel_error(dA, finite_diff(lambda a: mfl_forward(models["mfl"], X0, a), A0)) < 1e-4


def test_parameter_gradients_match_finite_differences(models, params, layout):
    model = models["mfl"]
    X, A = graph_inputs(params, layout)
    tape = Tape()
    grads = tape.backward(model.forward(X, A, tape)).params()
    for name in ("conv1.rel", "lin2.weight", "conv3.bias"):

        def f(value, name=name):
            replaced = dict(model.params)
            replaced[name] = value
            return mfl_forward(model.with_params(replaced), X, A)

        assert rel_error(grads[name], finite_diff(f, model.params[name])) < 1e-4


def test_initialization_is_seeded():
    a = MflModel.initialize(np.random.default_rng(3))
    b = MflModel.initialize(np.random.default_rng(3))
    for name in a.params:
        np.testing.assert_array_equal(a.params[name], b.params[name])
    bound = 1.0 / np.sqrt(32)
    assert np.all(np.abs(a.params["conv2.bias"]) <= bound)


@pytest.mark.parametrize("name", ["mfl", "gl", "actor", "critic"])
def test_checkpoint_round_trip(models, params, layout, tmp_path, name):
    model = models[name]
    path = tmp_path / f"{name}.ckpt"
    save_checkpoint(model, path)
    loaded = load_checkpoint(path)
    assert type(loaded) is type(model)
    for key, value in model.params.items():
        assert loaded.params[key].tobytes() == value.tobytes()
    X, A = graph_inputs(params, layout)
    before, after = model.forward(X, A), loaded.forward(X, A)
    if isinstance(before, tuple):
        for b, a in zip(before, after):
            np.testing.assert_array_equal(a.data, b.data)
    else:
        np.testing.assert_array_equal(after.data, before.data)


def test_truncated_checkpoint(models, tmp_path):
    path = tmp_path / "mfl.ckpt"
    save_checkpoint(models["mfl"], path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-9])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
    path.write_bytes(raw[:20])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_checkpoint_of_another_architecture(models, tmp_path):
    path = tmp_path / "mfl.ckpt"
    save_checkpoint(models["mfl"], path)
    with pytest.raises(ShapeError):
        load_checkpoint(path, GlModel)
    assert isinstance(load_checkpoint(path, MflModel), MflModel)


def test_not_a_checkpoint(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"hello\nend\n")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
    path.write_bytes(b"relaynet-checkpoint v1\narchitecture nosuch\nend\n")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


@pytest.mark.parametrize("model_class", [SynthModel, FirstOrderMflModel])
def test_checkpoint_of_an_experiment_architecture(model_class, tmp_path):
    path = tmp_path / f"{model_class.architecture}.ckpt"
    save_checkpoint(model_class.initialize(np.random.default_rng(1)), path)
    assert type(load_checkpoint(path)) is model_class


def test_fresh_interpreter_resolves_every_architecture(tmp_path):
    path = tmp_path / "synth.ckpt"
    save_checkpoint(SynthModel.initialize(np.random.default_rng(1)), path)
    code = f"from relaynet.models import load_checkpoint; print(type(load_checkpoint({str(path)!r})).__name__)"
    done = subprocess.run([sys.executable, "-c", code], cwd=ROOT, capture_output=True, text=True, check=True)
    assert done.stdout.strip() == "SynthModel"
