"""Executable checks of the equivalences, asymptotic formulas and value oracles.

Each check returns a CheckResult carrying the measured discrepancy and the
tolerance it was held to.  The Monte-Carlo oracles here simulate returns
directly and never call the closed-form solvers they are compared against.
"""
import functools
import inspect
import time
from dataclasses import dataclass

import numpy as np

from .asymptotics import asymptotic_mse_diag, asymptotic_mse_general, dls_gap_ratio, kron_cov_contract
from .decoupled import SeparableValue, reward_from_value
from .estimators import lstd_linear, lstd_quadratic, mb_lifted_lqr, mb_linear
from .linear import (DIAGONAL, GENERAL, LQR, LinearSystem, lqr_value_matrix, random_stable_matrix,
                     simulate_linear, simulate_linear_batch, stationary_covariance, true_beta)
from .mrp import TabularMRP, exact_value

SUITES = ("equivalences", "asymptotics", "oracles")


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: measured={self.measured:.6g} tolerance={self.tolerance:.6g} ({self.seconds:.1f}s) {self.detail}".rstrip()


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    return wrapper


# Monte-Carlo oracles ----------------------------------------------------------

def tabular_rollout_values(P, r, gamma, n_rollouts=10**5, horizon=200, seed=0):
    """Mean and standard error of truncated discounted returns from every state."""
    P = np.asarray(P, dtype=float)
    S = P.shape[0]
    rng = np.random.default_rng(seed)
    # flattened CDF: row s occupies (s, s+1], so searchsorted(s + u) - S*s picks the column
    cdf = np.cumsum(P, axis=1)
    cdf[:, -1] = 1.0
    flat = (cdf + np.arange(S)[:, None]).ravel()
    state = np.repeat(np.arange(S), n_rollouts)
    ret = np.zeros(state.size)
    disc = 1.0
    for _ in range(horizon):
        ret += disc * r[state]
        disc *= gamma
        key = state + rng.random(state.size)
        idx = np.searchsorted(flat, key, side="right")
        state = np.minimum(idx - S * state, S - 1)
    ret = ret.reshape(S, n_rollouts)
    return ret.mean(axis=1), ret.std(axis=1, ddof=1) / np.sqrt(n_rollouts)


def lqr_rollout_value(A, Q, x0, gamma, sigma=1.0, n_rollouts=10**5, horizon=200, seed=0):
    """Mean and standard error of ``sum_t gamma^t x_t^T Q x_t`` from ``x0``."""
    rng = np.random.default_rng(seed)
    d = A.shape[0]
    X = np.tile(np.asarray(x0, dtype=float), (n_rollouts, 1))
    ret = np.zeros(n_rollouts)
    disc = 1.0
    for _ in range(horizon):
        ret += disc * np.einsum("ni,ij,nj->n", X, Q, X)
        disc *= gamma
        X = X @ A.T + sigma * rng.standard_normal((n_rollouts, d))
    return ret.mean(), ret.std(ddof=1) / np.sqrt(n_rollouts)


def monte_carlo_scaled_mse(system, estimator, n, reps, base_seed=0, chunk=20):
    """``n * mean ||beta_hat - beta||^2`` over ``reps`` independent trajectories."""
    beta = true_beta(system.A, system.reward, system.gamma)
    errs = []
    for start in range(0, reps, chunk):
        seeds = [base_seed + k for k in range(start, min(start + chunk, reps))]
        for data in simulate_linear_batch(system, n, seeds):
            e = estimator(data) - beta
            errs.append(float(e @ e))
    errs = np.asarray(errs)
    return n * errs.mean(), n * errs.std(ddof=1) / np.sqrt(reps)


# equivalences -------------------------------------------------------------------

@_timed
def check_lstd_equals_plugin(n_datasets=100, seed=0, tol=1e-8):
    """LSTD with linear features equals the unconstrained plug-in on every dataset."""
    worst = 0.0
    for k in range(n_datasets):
        rng = np.random.default_rng([seed, k])
        d = int(rng.integers(1, 11))
        n = int(rng.integers(d + 5, 1001))
        A = random_stable_matrix(d, float(rng.uniform(0.1, 0.95)), seed * 1000 + k)
        system = LinearSystem(A, rng.standard_normal(d), 1.0, 0.9, GENERAL)
        data = simulate_linear(system, n, seed * 1000 + k)
        b_td = lstd_linear(data, 0.9).params
        # the identity is algebraic, so it is checked even when the fitted model is unstable
        b_mb = mb_linear(data, 0.9, allow_unstable=True).params
        worst = max(worst, np.linalg.norm(b_td - b_mb) / max(np.linalg.norm(b_mb), 1e-12))
    return CheckResult("LSTD == unconstrained plug-in (linear)", worst <= tol, worst, tol,
                       f"{n_datasets} datasets, d in 1..10")


@_timed
def check_quadratic_lstd_equals_lifted(n_datasets=50, seed=0, tol=1e-6):
    """Quadratic LSTD equals the lifted unconstrained plug-in on every dataset."""
    worst = 0.0
    for k in range(n_datasets):
        rng = np.random.default_rng([seed, k, 2])
        d = int(rng.integers(1, 5))
        n = int(rng.integers(d * d + 10, 1001))
        A = random_stable_matrix(d, float(rng.uniform(0.1, 0.95)), seed * 1000 + k)
        Q = rng.standard_normal((d, d))
        system = LinearSystem(A, Q, 1.0, 0.9, LQR)
        data = simulate_linear(system, n, seed * 1000 + k)
        P_td = lstd_quadratic(data, 0.9).params.P
        P_mb = mb_lifted_lqr(data, 0.9).params.P
        worst = max(worst, np.linalg.norm(P_td - P_mb) / max(np.linalg.norm(P_mb), 1e-12))
    return CheckResult("quadratic LSTD == lifted plug-in", worst <= tol, worst, tol,
                       f"{n_datasets} datasets, d in 1..4")


# asymptotics --------------------------------------------------------------------

@_timed
def check_general_asymptotic_mse(d=3, radius=0.8, gamma=0.9, sigma=1.0, n=10**5, reps=200, seed=0, rel_tol=0.15):
    """Monte-Carlo ``n * MSE`` of LSTD against the general-dynamics limit."""
    A = random_stable_matrix(d, radius, seed)
    system = LinearSystem(A, np.ones(d), sigma, gamma, GENERAL)
    mc, se = monte_carlo_scaled_mse(system, lambda D: lstd_linear(D, gamma).params, n, reps, seed)
    theory = asymptotic_mse_general(A, np.ones(d), gamma, sigma).value
    rel = abs(mc - theory) / theory
    return CheckResult("LSTD n*MSE vs general-dynamics limit", rel <= rel_tol, rel, rel_tol,
                       f"MC={mc:.4g}+-{se:.2g} theory={theory:.4g}")


@_timed
def check_diag_asymptotic_mse(d=3, lam=0.8, gamma=0.9, sigma=1.0, n=10**5, reps=200, seed=0, rel_tol=0.15):
    """Monte-Carlo ``n * MSE`` of the diagonal plug-in against its limit."""
    A = lam * np.eye(d)
    system = LinearSystem(A, np.ones(d), sigma, gamma, DIAGONAL)
    mc, se = monte_carlo_scaled_mse(system, lambda D: mb_linear(D, gamma, "diagonal").params, n, reps, seed)
    theory = asymptotic_mse_diag(A, np.ones(d), gamma, sigma).value
    rel = abs(mc - theory) / theory
    return CheckResult("diagonal plug-in n*MSE vs diagonal limit", rel <= rel_tol, rel, rel_tol,
                       f"MC={mc:.4g}+-{se:.2g} theory={theory:.4g}")


@_timed
def check_gap_ratio_identity(tol=1e-12):
    """Closed-form gap ratio equals the quotient of the two limits on a grid."""
    worst = 0.0
    grid = [0.1, 0.3, 0.5, 0.7, 0.9, 0.95]
    for d in range(1, 51):
        for lam in grid:
            for gamma in grid:
                A = lam * np.eye(d)
                q = (asymptotic_mse_general(A, np.ones(d), gamma).value
                     / asymptotic_mse_diag(A, np.ones(d), gamma).value)
                worst = max(worst, abs(q - dls_gap_ratio(d, lam, gamma)) / q)
    return CheckResult("gap ratio == general/diagonal limit quotient", worst <= tol, worst, tol, "d=1..50")


@_timed
def check_diag_domination(n_instances=200, seed=0):
    """The diagonal limit never exceeds the general limit on diagonal systems."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(n_instances):
        d = int(rng.integers(1, 11))
        A = np.diag(rng.uniform(-0.95, 0.95, d))
        theta = rng.standard_normal(d)
        gamma = float(rng.uniform(0.05, 0.99))
        g = asymptotic_mse_general(A, theta, gamma).value
        dg = asymptotic_mse_diag(A, theta, gamma).value
        worst = min(worst, (g - dg) / g)
    # relative slack for rounding when the two coincide (d = 1)
    return CheckResult("general limit >= diagonal limit", worst >= -1e-12, worst, -1e-12,
                       f"{n_instances} random diagonal instances (min relative margin)")


# value oracles --------------------------------------------------------------------

def random_tabular_mrp(rng, max_states=10, gamma=0.9):
    S = int(rng.integers(2, max_states + 1))
    P = rng.dirichlet(np.ones(S), size=S)
    return TabularMRP(P, rng.uniform(-1.0, 1.0, S), gamma)


@_timed
def check_tabular_value_oracle(n_mrps=10, n_rollouts=10**5, horizon=200, seed=0, n_se=4.0):
    """Exact tabular values sit within ``n_se`` standard errors of rollout means."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(n_mrps):
        mrp = random_tabular_mrp(rng)
        mean, se = tabular_rollout_values(mrp.P, mrp.r, mrp.gamma, n_rollouts, horizon, seed=[seed, k])
        worst = max(worst, float(np.max(np.abs(exact_value(mrp) - mean) / se)))
    return CheckResult("tabular exact value vs rollouts", worst <= n_se, worst, n_se,
                       f"{n_mrps} MRPs, worst |z|")


@_timed
def check_lqr_value_oracle(n_instances=5, n_rollouts=10**5, horizon=200, seed=0, n_se=4.0, gamma=0.9):
    """Quadratic values from the Lyapunov solve match rollout returns."""
    rng = np.random.default_rng([seed, 7])
    worst = 0.0
    for k in range(n_instances):
        d = int(rng.integers(1, 4))
        A = random_stable_matrix(d, float(rng.uniform(0.3, 0.9)), seed * 100 + k)
        M = rng.standard_normal((d, d))
        Q = M @ M.T / d
        x0 = rng.standard_normal(d)
        value = lqr_value_matrix(A, Q, gamma)(x0)
        mean, se = lqr_rollout_value(A, Q, x0, gamma, 1.0, n_rollouts, horizon, seed=[seed, k])
        worst = max(worst, abs(value - mean) / se)
    return CheckResult("LQR quadratic value vs rollouts", worst <= n_se, worst, n_se,
                       f"{n_instances} instances, worst |z|")


@_timed
def check_stationary_covariance_series(seed=0, terms=10**4, tol=1e-8):
    """Lyapunov solution vs the truncated series ``sum_k A^k sigma^2 (A^T)^k``."""
    A = random_stable_matrix(4, 0.9, seed)
    sigma = 1.3
    S = np.zeros((4, 4))
    Ak = np.eye(4)
    for _ in range(terms):
        S += sigma**2 * Ak @ Ak.T
        Ak = A @ Ak
    err = float(np.abs(stationary_covariance(A, sigma) - S).max() / np.abs(S).max())
    return CheckResult("stationary covariance vs series", err <= tol, err, tol)


@_timed
def check_kron_covariance(n_draws=10**6, seed=0, rel_tol=0.02):
    """Sample covariance of ``M theta`` with ``Cov(vec(M^T)) = kron(B, C)``."""
    rng = np.random.default_rng(seed)
    G1, G2 = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    B = G1 @ G1.T + 0.5 * np.eye(3)
    C = G2 @ G2.T + 0.5 * np.eye(3)
    theta = rng.standard_normal(3)
    L = np.linalg.cholesky(np.kron(B, C))
    # rows of draws are vec(M^T), i.e. M row-major
    M = (rng.standard_normal((n_draws, 9)) @ L.T).reshape(n_draws, 3, 3)
    y = M @ theta
    emp = np.cov(y, rowvar=False)
    target = kron_cov_contract(B, C, theta)
    rel = float(np.linalg.norm(emp - target) / np.linalg.norm(target))
    return CheckResult("Cov(M theta) == (theta^T C theta) B by sampling", rel <= rel_tol, rel, rel_tol,
                       f"{n_draws} draws")


@_timed
def check_separable_value_realized_by_dense_kernel(n_cases=20, seed=0, tol=1e-9):
    """A dense, non-product kernel realizes any separable value with suitable rewards."""
    rng = np.random.default_rng([seed, 11])
    worst = 0.0
    shapes = [(d, N) for d in (2, 3) for N in range(3, 12) if 9 <= N**d <= 125]
    for k in range(n_cases):
        d, N = shapes[k % len(shapes)]
        size = N**d
        P = rng.dirichlet(np.ones(size), size=size)
        V = SeparableValue(tuple(rng.standard_normal(N) for _ in range(d))).to_joint()
        gamma = float(rng.uniform(0.5, 0.99))
        r = reward_from_value(P, V, gamma, check=False)
        err = float(np.abs(exact_value(TabularMRP(P, r, gamma)) - V).max())
        worst = max(worst, err)
    return CheckResult("dense kernel realizes separable value", worst <= tol, worst, tol,
                       f"{n_cases} cases, 9..125 joint states")


@_timed
def check_quadratic_class_recovery(n_cases=20, seed=0, tol=1e-10):
    """Any ``P`` is the value matrix of ``A = I/2`` and ``Q = (4 - gamma)/4 P``."""
    rng = np.random.default_rng([seed, 13])
    worst = 0.0
    for _ in range(n_cases):
        d = int(rng.integers(1, 6))
        gamma = float(rng.uniform(0.05, 0.99))
        P = rng.standard_normal((d, d))
        got = lqr_value_matrix(0.5 * np.eye(d), (4.0 - gamma) / 4.0 * P, gamma).P
        worst = max(worst, float(np.abs(got - P).max() / max(np.abs(P).max(), 1e-12)))
    return CheckResult("every P is an LQR value matrix (A = I/2)", worst <= tol, worst, tol)


def run_suite(name, seed=0, report=None):
    checks = {
        "equivalences": [check_lstd_equals_plugin, check_quadratic_lstd_equals_lifted],
        "asymptotics": [check_general_asymptotic_mse, check_diag_asymptotic_mse,
                        check_gap_ratio_identity, check_diag_domination],
        "oracles": [check_tabular_value_oracle, check_lqr_value_oracle, check_stationary_covariance_series,
                    check_kron_covariance, check_separable_value_realized_by_dense_kernel,
                    check_quadratic_class_recovery],
    }
    names = SUITES if name == "all" else (name,)
    results = []
    for suite in names:
        for check in checks[suite]:
            res = check(seed=seed) if "seed" in inspect.signature(check).parameters else check()
            results.append(res)
            if report is not None:
                report(res)
    return results
