import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from valuegap import TabularMRP, TransitionDataset, exact_value, simulate_trajectory, stationary_distribution
from valuegap.exceptions import ConvergenceError
from valuegap.mrp import TABULAR, VECTOR
from valuegap.verify import tabular_rollout_values

FLIP = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_absorbing_chain_is_geometric():
    r = np.array([1.0, -2.0, 0.5])
    V = exact_value(TabularMRP(np.eye(3), r, 0.9))
    np.testing.assert_allclose(V, 10.0 * r, rtol=1e-12)


def test_zero_rewards_give_zero_value(rng):
    P = rng.dirichlet(np.ones(4), size=4)
    assert np.all(exact_value(TabularMRP(P, np.zeros(4), 0.7)) == 0.0)


def test_flip_chain_matches_series_sum():
    # direct path sum: the chain alternates 0,1,0,1,... from state 0
    gamma, r = 0.5, np.array([1.0, 0.0])
    t = np.arange(10**6)
    from0 = np.sum(gamma ** t * r[t % 2])
    from1 = np.sum(gamma ** t * r[(t + 1) % 2])
    V = exact_value(TabularMRP(FLIP, r, gamma))
    np.testing.assert_allclose(V, [from0, from1], atol=1e-9)


def test_bellman_residual(rng):
    P = rng.dirichlet(np.ones(6), size=6)
    r = rng.standard_normal(6)
    V = exact_value(TabularMRP(P, r, 0.95))
    assert np.abs(V - 0.95 * P @ V - r).max() <= 1e-10 * (1 + np.abs(r).max())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 0.99))
def test_value_is_linear_in_rewards(seed, a, b, gamma):
    rng = np.random.default_rng(seed)
    S = int(rng.integers(1, 9))
    P = rng.dirichlet(np.ones(S), size=S)
    r1, r2 = rng.standard_normal(S), rng.standard_normal(S)
    lhs = exact_value(TabularMRP(P, a * r1 + b * r2, gamma))
    rhs = a * exact_value(TabularMRP(P, r1, gamma)) + b * exact_value(TabularMRP(P, r2, gamma))
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * (1 + np.abs(rhs).max()))


def test_value_within_rollout_band(rng):
    P = rng.dirichlet(np.ones(5), size=5)
    mrp = TabularMRP(P, rng.uniform(-1, 1, 5), 0.9)
    mean, se = tabular_rollout_values(mrp.P, mrp.r, mrp.gamma, n_rollouts=20000, seed=3)
    assert np.all(np.abs(exact_value(mrp) - mean) <= 4 * se)


@pytest.mark.parametrize("gamma", [0.0, 1.0, -0.1, 1.5, np.nan])
def test_rejects_bad_gamma(gamma):
    with pytest.raises(ValueError):
        TabularMRP(np.eye(2), np.zeros(2), gamma)


def test_rejects_non_stochastic_kernel():
    with pytest.raises(ValueError):
        TabularMRP(np.array([[0.5, 0.6], [0.5, 0.5]]), np.zeros(2), 0.9)
    with pytest.raises(ValueError):
        TabularMRP(np.array([[1.2, -0.2], [0.5, 0.5]]), np.zeros(2), 0.9)
    with pytest.raises(ValueError):
        TabularMRP(np.eye(2), np.zeros(3), 0.9)


def test_mrp_is_immutable():
    mrp = TabularMRP(np.eye(2), np.ones(2), 0.9)
    with pytest.raises(ValueError):
        mrp.P[0, 0] = 0.0


def test_noiseless_absorbing_trajectory():
    mrp = TabularMRP(np.eye(3), np.array([2.0, 0.0, 1.0]), 0.9)
    data = simulate_trajectory(mrp, 0, 5, noise_sd=0.0, seed=1)
    assert list(data.triples()) == [(0, 2.0, 0)] * 5


def test_trajectory_is_chained_and_reproducible(rng):
    mrp = TabularMRP(rng.dirichlet(np.ones(4), size=4), rng.standard_normal(4), 0.9)
    a = simulate_trajectory(mrp, 1, 500, seed=9)
    b = simulate_trajectory(mrp, 1, 500, seed=9)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.rewards, b.rewards)
    assert np.array_equal(a.next_states[:-1], a.states[1:])
    assert a.states[0, 0] == 1


def test_noiseless_rewards_equal_state_means(rng):
    mrp = TabularMRP(rng.dirichlet(np.ones(4), size=4), rng.standard_normal(4), 0.9)
    data = simulate_trajectory(mrp, 0, 200, noise_sd=0.0, seed=2)
    assert np.array_equal(data.rewards, mrp.r[data.states[:, 0]])


def test_flip_chain_transition_frequencies():
    data = simulate_trajectory(TabularMRP(FLIP, np.zeros(2), 0.9), 0, 10**4, noise_sd=0.0, seed=0)
    counts = np.zeros((2, 2))
    np.add.at(counts, (data.states[:, 0], data.next_states[:, 0]), 1)
    assert np.array_equal(counts / counts.sum(axis=1, keepdims=True), FLIP)


def test_simulate_trajectory_preconditions():
    mrp = TabularMRP(np.eye(2), np.zeros(2), 0.9)
    with pytest.raises(ValueError):
        simulate_trajectory(mrp, 0, 0)
    with pytest.raises(ValueError):
        simulate_trajectory(mrp, 0, 5, noise_sd=-1.0)
    with pytest.raises(ValueError):
        simulate_trajectory(mrp, 2, 5)


def test_periodic_chain_has_no_stationary_limit():
    with pytest.raises(ConvergenceError):
        stationary_distribution(FLIP)


def test_rank_one_kernel_stationary():
    q = np.array([0.2, 0.5, 0.3])
    np.testing.assert_allclose(stationary_distribution(np.tile(q, (3, 1))), q, atol=1e-14)


def test_stationary_matches_left_eigenvector(rng):
    P = rng.random((5, 5)) + 0.01
    P /= P.sum(axis=1, keepdims=True)
    w, vl = np.linalg.eig(P.T)
    v = np.real(vl[:, np.argmin(np.abs(w - 1))])
    pi = stationary_distribution(P)
    np.testing.assert_allclose(pi, v / v.sum(), atol=1e-8)
    assert np.abs(pi @ P - pi).max() < 1e-10 and abs(pi.sum() - 1) < 1e-12


def test_dataset_validation():
    with pytest.raises(ValueError):
        TransitionDataset(np.zeros((3, 2)), np.zeros(2), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        TransitionDataset(np.zeros((3, 2)), np.zeros(3), np.zeros((3, 1)))
    with pytest.raises(ValueError):
        TransitionDataset(np.zeros((0, 2)), np.zeros(0), np.zeros((0, 2)))
    with pytest.raises(ValueError):
        TransitionDataset(np.array([0, 3]), np.zeros(2), np.array([1, 0]), kind=TABULAR, dims=(3,))
    with pytest.raises(ValueError):
        TransitionDataset(np.array([0.5]), np.zeros(1), np.array([1.0]), kind=TABULAR)
    with pytest.raises(ValueError):
        TransitionDataset(np.zeros(2), [0.0, np.inf], np.zeros(2))
    with pytest.raises(ValueError):
        TransitionDataset(np.zeros(2), np.zeros(2), np.zeros(2), kind="graph")


def test_dataset_shapes_and_dims():
    data = TransitionDataset(np.array([0, 2, 1]), [1.0, 2.0, 3.0], np.array([2, 1, 0]), kind=TABULAR)
    assert data.dims == (3,) and data.dim == 1 and len(data) == data.n == 3
    vec_data = TransitionDataset(np.ones((4, 2)), np.zeros(4), np.ones((4, 2)), kind=VECTOR)
    assert vec_data.dim == 2 and vec_data.states.dtype == float
