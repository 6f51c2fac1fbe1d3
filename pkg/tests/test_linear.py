import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from valuegap import (LinearSystem, QuadraticValue, kron_dynamics, lift_dataset, lqr_value_matrix,
                      random_stable_matrix, simulate_linear, stationary_covariance, true_beta)
from valuegap.exceptions import UnstableModelError
from valuegap.linear import DIAGONAL, GENERAL, LQR, lift_states, random_stable_diagonal, simulate_linear_batch, unvec, vec
from valuegap.verify import lqr_rollout_value


def _radius(A):
    return np.max(np.abs(np.linalg.eigvals(A)))


def test_memoryless_system_draws_iid_noise():
    system = LinearSystem(np.zeros((2, 2)), np.zeros(2), 1.0, 0.9, GENERAL)
    data = simulate_linear(system, 20000, seed=0)
    np.testing.assert_allclose(np.cov(data.states, rowvar=False), np.eye(2), atol=0.05)
    assert abs(data.rewards.std() - 1.0) < 0.03
    assert abs(np.corrcoef(data.states[:-1, 0], data.states[1:, 0])[0, 1]) < 0.03


def test_simulation_is_bitwise_reproducible():
    system = LinearSystem(random_stable_matrix(3, 0.8, 1), np.ones(3), 1.0, 0.9, GENERAL)
    a, b = simulate_linear(system, 300, seed=5), simulate_linear(system, 300, seed=5)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.rewards, b.rewards)
    assert np.array_equal(a.next_states[:-1], a.states[1:])


def test_batch_rows_do_not_depend_on_batch():
    system = LinearSystem(random_stable_matrix(3, 0.8, 1), np.ones(3), 1.0, 0.9, GENERAL)
    alone = simulate_linear(system, 200, seed=11)
    batch = simulate_linear_batch(system, 200, [3, 11, 7])
    assert np.array_equal(alone.states, batch[1].states) and np.array_equal(alone.rewards, batch[1].rewards)


def test_scalar_autocorrelation():
    data = simulate_linear(LinearSystem(np.array([[0.9]]), [0.0], 1.0, 0.9, GENERAL), 10**5, seed=2)
    x = data.states[:, 0]
    assert abs(np.corrcoef(x[:-1], x[1:])[0, 1] - 0.9) < 0.02


def test_lqr_rewards_are_quadratic_plus_noise():
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    system = LinearSystem(0.5 * np.eye(2), Q, 0.5, 0.9, LQR)
    data = simulate_linear(system, 20000, seed=3)
    resid = data.rewards - np.einsum("ni,ij,nj->n", data.states, Q, data.states)
    assert abs(resid.std() - 0.5) < 0.01


def test_system_validation():
    with pytest.raises(UnstableModelError):
        LinearSystem(np.eye(2), np.ones(2))
    with pytest.raises(ValueError):
        LinearSystem(np.array([[0.5, 0.1], [0.0, 0.5]]), np.ones(2), kind=DIAGONAL)
    with pytest.raises(ValueError):
        LinearSystem(0.5 * np.eye(2), np.ones(3))
    with pytest.raises(ValueError):
        LinearSystem(0.5 * np.eye(2), np.ones(2), kind=LQR)
    with pytest.raises(ValueError):
        LinearSystem(0.5 * np.eye(2), np.ones(2), sigma=0.0)
    with pytest.raises(ValueError):
        LinearSystem(0.5 * np.eye(2), np.ones(2), kind="cubic")


def test_true_beta_cases():
    assert np.all(true_beta(0.5 * np.eye(3), np.zeros(3), 0.9) == 0)
    np.testing.assert_allclose(true_beta(0.9 * np.eye(4), np.ones(4), 0.9), np.full(4, 1 / 0.19), rtol=1e-12)
    assert 1 / 0.19 == pytest.approx(5.263158, abs=1e-6)
    N = np.array([[0.0, 1.0], [0.0, 0.0]])
    theta = np.array([1.0, -2.0])
    np.testing.assert_allclose(true_beta(N, theta, 0.7), theta + 0.7 * N.T @ theta, atol=1e-15)
    with pytest.raises(UnstableModelError):
        true_beta(1.2 * np.eye(2), np.ones(2), 0.9)


def test_true_beta_residual(rng):
    A = random_stable_matrix(5, 0.9, 4)
    theta = rng.standard_normal(5)
    beta = true_beta(A, theta, 0.9)
    assert np.abs(beta - 0.9 * A.T @ beta - theta).max() < 1e-12


def test_linear_value_matches_noiseless_rollout(rng):
    # V(x) = sum_{t>=0} gamma^t theta^T A^t x for the noiseless system
    A = random_stable_matrix(4, 0.9, 6)
    theta, x = rng.standard_normal(4), rng.standard_normal(4)
    gamma, total, xt = 0.9, 0.0, x.copy()
    for t in range(500):
        total += gamma**t * theta @ xt
        xt = A @ xt
    assert true_beta(A, theta, gamma) @ x == pytest.approx(total, abs=1e-8)


def test_stationary_covariance_cases():
    np.testing.assert_allclose(stationary_covariance(np.zeros((3, 3)), 2.0), 4 * np.eye(3), atol=1e-15)
    np.testing.assert_allclose(stationary_covariance(0.9 * np.eye(2)), np.eye(2) / 0.19, rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 0.98), st.floats(0.2, 3.0))
def test_stationary_covariance_residual_and_spd(seed, radius, sigma):
    d = int(np.random.default_rng(seed).integers(1, 8))
    A = random_stable_matrix(d, radius, seed)
    P = stationary_covariance(A, sigma)
    assert np.linalg.norm(A @ P @ A.T - P + sigma**2 * np.eye(d)) <= 1e-10 * sigma**2 * d * max(1.0, np.abs(P).max())
    assert np.array_equal(P, P.T) and np.linalg.eigvalsh(P).min() > 0


def test_stationary_covariance_series():
    A = random_stable_matrix(4, 0.9, 0)
    S, Ak = np.zeros((4, 4)), np.eye(4)
    for _ in range(10**4):
        S += Ak @ Ak.T
        Ak = A @ Ak
    np.testing.assert_allclose(stationary_covariance(A), S, atol=1e-8 * np.abs(S).max())


def test_lqr_value_cases(rng):
    Q = rng.standard_normal((3, 3))
    np.testing.assert_allclose(lqr_value_matrix(np.zeros((3, 3)), Q, 0.9).P, Q, atol=1e-15)
    for gamma in (0.1, 0.5, 0.9):
        np.testing.assert_allclose(lqr_value_matrix(0.5 * np.eye(3), Q, gamma).P, Q / (1 - gamma / 4), rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.99))
def test_every_matrix_is_an_lqr_value(seed, gamma):
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((int(rng.integers(1, 6)),) * 2)
    got = lqr_value_matrix(0.5 * np.eye(P.shape[0]), (4 - gamma) / 4 * P, gamma).P
    np.testing.assert_allclose(got, P, atol=1e-10 * max(1.0, np.abs(P).max()))


def test_lqr_value_residual_and_symmetry(rng):
    A = random_stable_matrix(4, 0.95, 2)
    M = rng.standard_normal((4, 4))
    Q = M + M.T
    P = lqr_value_matrix(A, Q, 0.9).P
    assert np.linalg.norm(0.9 * A.T @ P @ A - P + Q) <= 1e-10 * np.linalg.norm(Q)
    np.testing.assert_allclose(P, P.T, atol=1e-12)


def test_lqr_value_matches_rollouts(rng):
    A = random_stable_matrix(2, 0.7, 8)
    M = rng.standard_normal((2, 2))
    Q = M @ M.T
    x0 = rng.standard_normal(2)
    value = lqr_value_matrix(A, Q, 0.9)(x0)
    mean, se = lqr_rollout_value(A, Q, x0, 0.9, n_rollouts=20000, seed=1)
    assert abs(value - mean) <= 4 * se


def test_quadratic_value_offset():
    v = QuadraticValue(np.eye(2), 0.9, 2.0)
    assert v.offset == pytest.approx(0.9 * 4 / 0.1)
    assert v(np.zeros(2)) == pytest.approx(2 * v.offset)
    np.testing.assert_allclose(v(np.array([[1.0, 0.0], [0.0, 0.0]])), [1 + 2 * v.offset, 2 * v.offset])


def test_lift_examples():
    z = lift_states(np.array([1.0, 0.0, 0.0]))[0]
    assert z[0] == 1.0 and z.sum() == 1.0
    np.testing.assert_array_equal(lift_states(np.array([1.0, 2.0]))[0], [1, 2, 2, 4])
    x = np.array([0.3, -1.2, 2.0])
    np.testing.assert_array_equal(lift_states(x), lift_states(-x))


def test_lift_dataset_keeps_rewards(rng):
    system = LinearSystem(0.5 * np.eye(2), np.eye(2), 1.0, 0.9, LQR)
    data = simulate_linear(system, 50, seed=0)
    lifted = lift_dataset(data)
    assert lifted.dim == 4 and np.array_equal(lifted.rewards, data.rewards)
    np.testing.assert_array_equal(lifted.states[3], vec(np.outer(data.states[3], data.states[3])))


def test_kron_dynamics(rng):
    assert np.array_equal(kron_dynamics(np.eye(3)), np.eye(9))
    np.testing.assert_allclose(kron_dynamics(0.7 * np.eye(2)), 0.49 * np.eye(4), atol=1e-15)
    A, x = rng.standard_normal((3, 3)), rng.standard_normal(3)
    np.testing.assert_allclose(kron_dynamics(A) @ vec(np.outer(x, x)), vec(A @ np.outer(x, x) @ A.T), atol=1e-12)


def test_vec_unvec_roundtrip(rng):
    M = rng.standard_normal((3, 3))
    assert np.array_equal(unvec(vec(M), 3), M)
    assert np.array_equal(vec(M)[:3], M[:, 0])


def test_lifted_drift(rng):
    # E[z' | x] = kron(A, A) z + sigma^2 vec(I)
    A = random_stable_matrix(2, 0.8, 3)
    sigma, x = 1.5, np.array([0.7, -1.1])
    X2 = A @ x + sigma * rng.standard_normal((10**5, 2))
    Z2 = lift_states(X2)
    mean, se = Z2.mean(axis=0), Z2.std(axis=0, ddof=1) / np.sqrt(len(Z2))
    target = kron_dynamics(A) @ vec(np.outer(x, x)) + sigma**2 * vec(np.eye(2))
    assert np.all(np.abs(mean - target) <= 4 * se)


def test_quadratic_value_equals_lifted_linear_value(rng):
    # the lifted mean follows z_{t+1} = M z_t + sigma^2 vec(I); its linear value with reward vec(Q)
    for seed in range(5):
        A = random_stable_matrix(3, 0.9, seed)
        M = rng.standard_normal((3, 3))
        Q, x, sigma, gamma = M @ M.T, rng.standard_normal(3), 1.3, 0.8
        Mk, z, total = kron_dynamics(A), vec(np.outer(x, x)), 0.0
        for t in range(400):
            total += gamma**t * vec(Q) @ z
            z = Mk @ z + sigma**2 * vec(np.eye(3))
        assert lqr_value_matrix(A, Q, gamma, sigma)(x) == pytest.approx(total, rel=1e-8)


def test_random_stable_generators():
    for seed in range(10):
        A = random_stable_matrix(5, 0.9, seed)
        assert abs(_radius(A) - 0.9) < 1e-8
        np.linalg.cholesky(stationary_covariance(A))
        D = random_stable_diagonal(5, 0.9, seed)
        assert abs(_radius(D) - 0.9) < 1e-12 and np.array_equal(D, np.diag(np.diag(D)))
    assert np.array_equal(random_stable_matrix(4, 0.5, 3), random_stable_matrix(4, 0.5, 3))
    with pytest.raises(ValueError):
        random_stable_matrix(3, 1.0)
