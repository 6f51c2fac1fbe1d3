"""Linear-Gaussian systems with linear or quadratic rewards.

``X_{t+1} = A X_t + eps_t`` with ``eps_t ~ N(0, sigma^2 I)`` and reward
``R_t = f(X_t) + eta_t`` with ``eta_t ~ N(0, sigma^2)``.  Values are
``E[sum_{t>=0} gamma^t f(X_t)]``, so ``V(x) = beta^T x`` with
``beta = (I - gamma A^T)^{-1} theta`` for linear rewards and
``V(x) = tr((x x^T + c I) P)`` with ``P = Q + gamma A^T P A`` and
``c = gamma sigma^2 / (1 - gamma)`` for quadratic rewards.

``vec`` is column stacking throughout, so ``vec(A X A^T) = kron(A, A) vec(X)``.
"""
from dataclasses import dataclass

import numpy as np

from ._validation import check_gamma, check_seed, check_square, spectral_radius
from .exceptions import ConvergenceError, UnstableModelError
from .mrp import VECTOR, TransitionDataset

GENERAL = "general-linear"
DIAGONAL = "diagonal-linear"
LQR = "lqr"
KINDS = (GENERAL, DIAGONAL, LQR)


def vec(M):
    """Column-stacking vectorization."""
    return np.asarray(M).ravel(order="F")


def unvec(v, d):
    return np.asarray(v).reshape((d, d), order="F")


@dataclass(frozen=True)
class LinearSystem:
    A: np.ndarray
    reward: np.ndarray
    sigma: float = 1.0
    gamma: float = 0.9
    kind: str = GENERAL

    def __post_init__(self):
        A = check_square(self.A, "dynamics matrix")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        rho = spectral_radius(A)
        if rho >= 1.0:
            raise UnstableModelError(f"dynamics matrix has spectral radius {rho:.6g} >= 1")
        if self.kind == DIAGONAL and np.any(A != np.diag(np.diag(A))):
            raise ValueError("diagonal-linear systems need a diagonal dynamics matrix")
        reward = np.asarray(self.reward, dtype=float)
        d = A.shape[0]
        if self.kind == LQR:
            if reward.shape != (d, d):
                raise ValueError(f"lqr reward must be a {d}x{d} matrix, got shape {reward.shape}")
        else:
            reward = reward.reshape(-1)
            if reward.shape != (d,):
                raise ValueError(f"linear reward must be a length-{d} vector, got shape {reward.shape}")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        for name, a in (("A", A), ("reward", reward)):
            a = a.copy()
            a.flags.writeable = False
            object.__setattr__(self, name, a)
        object.__setattr__(self, "gamma", check_gamma(self.gamma))
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def d(self):
        return self.A.shape[0]

    def mean_reward(self, X):
        X = np.atleast_2d(X)
        if self.kind == LQR:
            return np.einsum("ni,ij,nj->n", X, self.reward, X)
        return X @ self.reward

    def value(self, x):
        """True value at ``x`` (one state or a batch of rows)."""
        if self.kind == LQR:
            return lqr_value_matrix(self.A, self.reward, self.gamma, self.sigma)(x)
        b = true_beta(self.A, self.reward, self.gamma)
        return np.atleast_2d(x) @ b if np.ndim(x) == 2 else float(np.dot(x, b))


@dataclass(frozen=True)
class QuadraticValue:
    """``V(x) = tr((x x^T + gamma sigma^2/(1-gamma) I) P)``."""

    P: np.ndarray
    gamma: float
    sigma: float = 1.0

    @property
    def offset(self):
        return self.gamma * self.sigma**2 / (1.0 - self.gamma)

    def __call__(self, x):
        X = np.asarray(x, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        out = np.einsum("ni,ij,nj->n", X, self.P, X) + self.offset * np.trace(self.P)
        return float(out[0]) if single else out


def true_beta(A, theta, gamma):
    """Linear value coefficients ``(I - gamma A^T)^{-1} theta``."""
    A = check_square(A, "dynamics matrix")
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if gamma * spectral_radius(A) >= 1.0:
        raise UnstableModelError("gamma * A is not stable; discounted value diverges")
    return np.linalg.solve(np.eye(A.shape[0]) - gamma * A.T, theta)


def _lyapunov_sum(F, Q, tol=1e-12, max_doublings=64):
    """``X = sum_k (F^k)^T Q F^k``, the fixed point of ``X = Q + F^T X F``.

    Uses squared (doubling) fixed-point steps: after ``j`` steps the first
    ``2^j`` terms of the series are summed.
    """
    if spectral_radius(F) >= 1.0:
        raise UnstableModelError(f"Lyapunov operator not contractive (spectral radius {spectral_radius(F):.6g})")
    X = Q.copy()
    Fk = F.copy()
    for _ in range(max_doublings):
        step = Fk.T @ X @ Fk
        X = X + step
        Fk = Fk @ Fk
        if np.abs(step).max() <= tol * max(np.abs(X).max(), 1e-300):
            break
    else:
        raise ConvergenceError("Lyapunov iteration did not converge")
    return X


def stationary_covariance(A, sigma=1.0):
    """Solve ``A P A^T - P + sigma^2 I = 0``."""
    A = check_square(A, "dynamics matrix")
    d = A.shape[0]
    P = _lyapunov_sum(A.T, sigma**2 * np.eye(d))
    return 0.5 * (P + P.T)


def lqr_value_matrix(A, Q, gamma, sigma=1.0):
    """Solve ``gamma A^T P A - P + Q = 0`` for the quadratic value matrix."""
    A = check_square(A, "dynamics matrix")
    Q = check_square(Q, "reward matrix")
    gamma = check_gamma(gamma)
    P = _lyapunov_sum(np.sqrt(gamma) * A, Q)
    return QuadraticValue(P, gamma, sigma)


def lift_states(X):
    """Rows ``x`` -> rows ``vec(x x^T)`` (dimension d^2)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    # x x^T is symmetric so row- and column-stacking coincide
    return (X[:, :, None] * X[:, None, :]).reshape(n, d * d)


def lift_dataset(data):
    """Replace every state by ``vec(x x^T)``; rewards untouched."""
    if data.kind != VECTOR:
        raise ValueError("lifting needs real-vector states")
    return TransitionDataset(lift_states(data.states), data.rewards, lift_states(data.next_states), kind=VECTOR)


def kron_dynamics(A):
    """Dynamics of the lifted state: ``M = kron(A, A)``."""
    A = check_square(A, "dynamics matrix")
    return np.kron(A, A)


def random_stable_matrix(d, target_radius=0.9, seed=0):
    """Gaussian matrix rescaled to spectral radius ``target_radius``."""
    if not 0.0 < target_radius < 1.0:
        raise ValueError("target_radius must lie in (0, 1)")
    rng = np.random.default_rng(check_seed(seed))
    while True:
        G = rng.standard_normal((d, d))
        rho = spectral_radius(G)
        if rho > 1e-8:
            return G * (target_radius / rho)


def random_stable_diagonal(d, target_radius=0.9, seed=0):
    """Diagonal matrix with iid uniform(-1, 1) entries rescaled to radius ``target_radius``."""
    if not 0.0 < target_radius < 1.0:
        raise ValueError("target_radius must lie in (0, 1)")
    rng = np.random.default_rng(check_seed(seed))
    while True:
        a = rng.uniform(-1.0, 1.0, size=d)
        m = np.abs(a).max()
        if m > 1e-8:
            return np.diag(a * (target_radius / m))


def simulate_linear(system, n, seed=0):
    """Simulate ``n`` transitions started from the stationary law ``N(0, P_inf)``."""
    return simulate_linear_batch(system, n, [seed])[0]


def simulate_linear_batch(system, n, seeds):
    """One independent trajectory per seed, advanced in lockstep.

    Each trajectory draws its randomness from its own seed only, so the
    dataset for a seed does not depend on the other seeds in the batch.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    d, sigma = system.d, system.sigma
    L = np.linalg.cholesky(stationary_covariance(system.A, sigma))
    k = len(seeds)
    X = np.empty((k, n + 1, d))
    eps = np.empty((k, n, d))
    eta = np.empty((k, n))
    for j, seed in enumerate(seeds):
        rng = np.random.default_rng(check_seed(seed))
        X[j, 0] = L @ rng.standard_normal(d)
        eps[j] = sigma * rng.standard_normal((n, d))
        eta[j] = sigma * rng.standard_normal(n)
    A = system.A[None]
    for t in range(n):
        # elementwise product + row sum instead of BLAS keeps rows independent of k
        X[:, t + 1] = (A * X[:, t, None, :]).sum(axis=2) + eps[:, t]
    out = []
    for j in range(k):
        R = system.mean_reward(X[j, :-1]) + eta[j]
        out.append(TransitionDataset(X[j, :-1], R, X[j, 1:], kind=VECTOR))
    return out
