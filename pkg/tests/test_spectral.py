import numpy as np
import pytest

from conftest import random_deployment
from oracle import FD_STEP_GEOMETRY, charpoly_eigs, finite_diff, rel_error
from relaynet.channel import Deployment, adjacency
from relaynet.errors import DegenerateEigenvalueError, EigenConvergenceError, InputError
from relaynet.spectral import (
    endpoint_weights,
    jacobi_eigh,
    lambda2,
    lambda2_grad,
    unit_directions,
    wcc_step,
    weighted_laplacian,
)

K3 = np.ones((3, 3)) - np.eye(3)
PATH3 = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])


def random_symmetric(rng, n):
    M = rng.normal(size=(n, n))
    return 0.5 * (M + M.T)


def test_unit_weights_give_the_plain_laplacian():
    L = weighted_laplacian(K3, np.ones(3)).matrix
    np.testing.assert_array_equal(L, 3 * np.eye(3) - np.ones((3, 3)))


def test_complete_graph_spectrum():
    value, vec = lambda2(weighted_laplacian(K3, np.ones(3)))
    assert value == pytest.approx(3.0, abs=1e-12)
    values, _ = jacobi_eigh(weighted_laplacian(K3, np.ones(3)).matrix)
    np.testing.assert_allclose(values, [0.0, 3.0, 3.0], atol=1e-12)


def test_path_graph_lambda2():
    value, vec = lambda2(weighted_laplacian(PATH3, np.ones(3)))
    assert value == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-12)


def test_endpoint_weights():
    np.testing.assert_array_equal(endpoint_weights(6), [18.0, 1.0, 1.0, 1.0, 1.0, 18.0])


@pytest.mark.parametrize("W", [np.array([1.0, 0.0, 1.0]), np.array([1.0, -2.0, 1.0]), np.ones(4)])
def test_weighted_laplacian_rejects_bad_weights(W):
    with pytest.raises(InputError):
        weighted_laplacian(K3, W)


def test_weighted_laplacian_rejects_asymmetric_adjacency():
    A = K3.copy()
    A[0, 1] = 2.0
    with pytest.raises(InputError):
        weighted_laplacian(A, np.ones(3))


def test_jacobi_matches_the_oracle(rng):
    for n in range(2, 7):
        for _ in range(20):
            M = random_symmetric(rng, n)
            values, vectors = jacobi_eigh(M)
            np.testing.assert_allclose(values, charpoly_eigs(M), rtol=0, atol=1e-8)
            assert np.linalg.norm(M @ vectors - vectors * values) <= 1e-9 * max(1.0, np.linalg.norm(M))
            np.testing.assert_allclose(vectors.T @ vectors, np.eye(n), atol=1e-12)


def _check_decomposition(M):
    values, vectors = jacobi_eigh(M)
    n = M.shape[0]
    assert np.all(np.diff(values) >= 0.0)
    assert np.linalg.norm(M @ vectors - vectors * values) <= 1e-10 * max(1.0, np.linalg.norm(M))
    np.testing.assert_allclose(vectors.T @ vectors, np.eye(n), atol=1e-12)


def test_jacobi_converges_on_many_random_matrices(rng):
    for _ in range(200):
        M = rng.normal(size=(6, 6))
        _check_decomposition(M + M.T)


def test_jacobi_converges_on_deployment_laplacians(params, layout, rng):
    angles = np.arange(6) * np.pi / 3
    hexagon = Deployment(1.2 * np.column_stack([np.cos(angles), np.sin(angles)]), (0.0, 0.0))
    for dep in [layout, hexagon] + [random_deployment(rng) for _ in range(100)]:
        A = adjacency(params, dep)
        for W in (np.ones(dep.n), endpoint_weights(dep.n)):
            _check_decomposition(weighted_laplacian(A, W).matrix)


def test_jacobi_on_a_diagonal_matrix():
    values, vectors = jacobi_eigh(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_array_equal(values, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(np.abs(vectors), np.eye(3)[:, [1, 2, 0]])


def test_jacobi_rejects_bad_input():
    with pytest.raises(InputError):
        jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(InputError):
        jacobi_eigh(np.zeros((2, 3)))
    with pytest.raises(InputError):
        jacobi_eigh(np.array([[np.inf, 0.0], [0.0, 1.0]]))


def test_jacobi_reports_non_convergence(rng):
    with pytest.raises(EigenConvergenceError):
        jacobi_eigh(random_symmetric(rng, 6), max_sweeps=1)


def test_laplacians_of_deployments(params, rng):
    for _ in range(10):
        dep = random_deployment(rng)
        A = adjacency(params, dep)
        L_W = weighted_laplacian(A, endpoint_weights(dep.n))
        values, vectors = jacobi_eigh(L_W.matrix)
        assert values[0] >= -1e-9
        plain_values, plain_vectors = jacobi_eigh(weighted_laplacian(A, np.ones(dep.n)).matrix)
        assert plain_values[0] == pytest.approx(0.0, abs=1e-9)
        assert plain_values[1] > 0.0
        ones = np.full(dep.n, 1.0 / np.sqrt(dep.n))
        assert abs(abs(plain_vectors[:, 0] @ ones) - 1.0) < 1e-9
        value, vec = lambda2(L_W)
        assert np.linalg.norm(L_W.matrix @ vec - value * vec) <= 1e-9


def _lambda2_of(params, dep, W):
    return lambda relays: lambda2(weighted_laplacian(adjacency(params, dep.with_relays(relays)), W))[0]


def test_lambda2_grad_matches_finite_differences(params, layout, rng):
    W = endpoint_weights(6)
    checked = 0
    for _ in range(200):
        dep = random_deployment(rng)
        values, _ = jacobi_eigh(weighted_laplacian(adjacency(params, dep), W).matrix)
        if values[2] - values[1] < 1e-4:
            continue
        analytic = lambda2_grad(params, dep, W)
        numeric = finite_diff(_lambda2_of(params, dep, W), dep.relays, FD_STEP_GEOMETRY)
        assert rel_error(analytic, numeric) < 1e-5
        checked += 1
        if checked == 50:
            break
    assert checked == 50


def test_lambda2_grad_scales_with_the_weights(params, rng):
    dep = random_deployment(rng)
    W = endpoint_weights(6)
    g = lambda2_grad(params, dep, W)
    g_scaled = lambda2_grad(params, dep, 4.0 * W)
    np.testing.assert_allclose(g_scaled, g / 4.0, rtol=1e-8, atol=1e-14)
    np.testing.assert_allclose(unit_directions(g_scaled), unit_directions(g), atol=1e-10)


def test_lambda2_grad_mirror_symmetry(params, rng):
    dep = random_deployment(rng)
    flip = np.array([1.0, -1.0])
    mirrored = Deployment(dep.positions * flip, dep.jammer * flip)
    W = endpoint_weights(6)
    g, gm = lambda2_grad(params, dep, W), lambda2_grad(params, mirrored, W)
    np.testing.assert_allclose(gm[:, 0], g[:, 0], rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(gm[:, 1], -g[:, 1], rtol=1e-8, atol=1e-12)


def test_degenerate_lambda2_in_strict_mode(params):
    # a regular hexagon around the jammer has a doubly degenerate lambda_2
    angles = np.arange(6) * np.pi / 3
    positions = 1.2 * np.column_stack([np.cos(angles), np.sin(angles)])
    dep = Deployment(positions, (0.0, 0.0))
    W = np.ones(6)
    with pytest.raises(DegenerateEigenvalueError):
        lambda2_grad(params, dep, W, strict=True)
    assert np.all(np.isfinite(lambda2_grad(params, dep, W)))


def test_wcc_step_with_zero_step_is_identity(params, layout):
    moved = wcc_step(params, layout, endpoint_weights(6), 0.0)
    assert moved.same_as(layout)


def test_wcc_step_moves_each_relay_by_zeta(params, rng):
    dep = random_deployment(rng)
    moved = wcc_step(params, dep, endpoint_weights(6), 0.02)
    np.testing.assert_array_equal(moved.positions[[0, -1]], dep.positions[[0, -1]])
    np.testing.assert_allclose(np.linalg.norm(moved.relays - dep.relays, axis=1), 0.02, rtol=0, atol=1e-12)


def test_wcc_step_raises_lambda2(params, layout):
    W = endpoint_weights(6)
    before = lambda2(weighted_laplacian(adjacency(params, layout), W))[0]
    after = lambda2(weighted_laplacian(adjacency(params, wcc_step(params, layout, W, 1e-4)), W))[0]
    assert after > before


def test_zero_gradient_rows_stay_put():
    G = np.array([[0.0, 0.0], [3.0, 4.0]])
    np.testing.assert_array_equal(unit_directions(G), [[0.0, 0.0], [0.6, 0.8]])
