"""Model-free (LSTD) and model-based (plug-in) value estimators.

All functions take a TransitionDataset and a discount and return a
ValueEstimate.  Rank-deficient least-squares problems are solved in the
minimum-norm sense with singular-value cutoff ``1e-10 * s_max``; that only
happens where the deficiency is structural (one-hot features of a product
space, duplicated entries of ``vec(x x^T)``).
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._validation import RCOND, check_gamma, min_norm_solve, spectral_radius
from .decoupled import SeparableValue, joint_index
from .exceptions import RankDeficiencyError, UnstableModelError, UnvisitedStateError
from .linear import QuadraticValue, lift_states, lqr_value_matrix, unvec, vec
from .mrp import TABULAR, VECTOR, TabularMRP, exact_value

LINEAR = "linear"
QUADRATIC = "quadratic"
TABULAR_V = "tabular"
SEPARABLE = "separable"

UNCONSTRAINED = "unconstrained"
DIAGONAL = "diagonal"


@dataclass(frozen=True)
class ValueEstimate:
    """An estimated value function plus the metadata of how it was fitted.

    ``params`` is the coefficient vector (linear), a QuadraticValue, the
    value vector over (joint) states (tabular) or a SeparableValue.
    ``extras`` holds fitted model pieces such as ``A_hat`` or flags such as
    ``unvisited``.
    """

    kind: str
    params: object
    estimator: str
    n: int
    extras: dict = field(default_factory=dict)

    def __call__(self, states):
        if self.kind == LINEAR:
            return np.asarray(states, dtype=float) @ self.params
        if self.kind == TABULAR_V:
            S = np.asarray(states, dtype=np.int64)
            if S.ndim == 2:
                S = joint_index(S, self.extras["dims"]) if S.shape[1] > 1 else S[:, 0]
            return self.params[S]
        return self.params(states)

    @property
    def coef(self):
        """Flat parameter vector: beta, vec(P), V, or concatenated tables."""
        if self.kind == QUADRATIC:
            return vec(self.params.P)
        if self.kind == SEPARABLE:
            return np.concatenate(self.params.tables)
        return np.asarray(self.params)


def _vector_data(data, min_n=None):
    if data.kind != VECTOR:
        raise ValueError(f"estimator needs real-vector states, got {data.kind}")
    return data.states, data.rewards, data.next_states


def _svd_rank(M):
    s = np.linalg.svd(M, compute_uv=False)
    return int((s > RCOND * s[0]).sum()) if s.size and s[0] > 0 else 0


# linear features -------------------------------------------------------------

def lstd_linear(data, gamma):
    """LSTD with linear features: ``(X^T (X - gamma X'))^{-1} X^T R``."""
    gamma = check_gamma(gamma, allow_zero=True)
    X, R, X2 = _vector_data(data)
    d = X.shape[1]
    C = X.T @ (X - gamma * X2)
    b = X.T @ R
    rank = _svd_rank(C)
    if rank < d:
        raise RankDeficiencyError(f"LSTD matrix has numerical rank {rank} < {d}", rank=rank, required=d)
    beta = np.linalg.solve(C, b)
    return ValueEstimate(LINEAR, beta, "lstd-linear", len(data))


def fit_linear_dynamics(X, X2, constraint=UNCONSTRAINED):
    """Least-squares ``A_hat`` from ``X2 ~ X A^T``, optionally diagonal."""
    d = X.shape[1]
    if constraint == UNCONSTRAINED:
        return min_norm_solve(X, X2, required_rank=d, what="state design matrix").T
    if constraint == DIAGONAL:
        energy = (X * X).sum(axis=0)
        if np.any(energy <= 0):
            raise RankDeficiencyError("a state coordinate is never excited",
                                      rank=int((energy > 0).sum()), required=d)
        return np.diag((X2 * X).sum(axis=0) / energy)
    raise ValueError(f"unknown constraint {constraint!r}")


def mb_linear(data, gamma, constraint=UNCONSTRAINED, allow_unstable=False):
    """Plug-in estimate ``(I - gamma A_hat^T)^{-1} theta_hat``.

    ``A_hat`` is the least-squares dynamics fit over all matrices or over
    diagonal ones; ``theta_hat`` is the unconstrained reward regression.
    Raises UnstableModelError when ``gamma * A_hat`` is not stable unless
    ``allow_unstable`` (the closed form is still defined then, just not a
    meaningful discounted sum).
    """
    gamma = check_gamma(gamma, allow_zero=True)
    X, R, X2 = _vector_data(data)
    d = X.shape[1]
    A_hat = fit_linear_dynamics(X, X2, constraint)
    theta_hat = min_norm_solve(X, R, required_rank=d, what="state design matrix")
    if not allow_unstable and gamma * spectral_radius(A_hat) >= 1.0:
        raise UnstableModelError(f"fitted dynamics give gamma*rho(A_hat) = {gamma * spectral_radius(A_hat):.4g} >= 1")
    if constraint == DIAGONAL:
        beta = theta_hat / (1.0 - gamma * np.diag(A_hat))
    else:
        beta = np.linalg.solve(np.eye(d) - gamma * A_hat.T, theta_hat)
    name = "mb-linear" if constraint == UNCONSTRAINED else "mb-diagonal"
    return ValueEstimate(LINEAR, beta, name, len(data), {"A_hat": A_hat, "theta_hat": theta_hat})


# quadratic features ----------------------------------------------------------

def _lifted_features(X, gamma, sigma):
    d = X.shape[1]
    c = gamma * sigma**2 / (1.0 - gamma)
    return lift_states(X) + c * vec(np.eye(d))


def _sym_rank(d):
    return d * (d + 1) // 2


def lstd_quadratic(data, gamma, sigma=1.0):
    """LSTD over ``x -> tr((x x^T + c I) P)`` with ``c = gamma sigma^2/(1-gamma)``.

    Features ``vec(x x^T) + c vec(I)`` only span symmetric matrices, so the
    system has rank ``d(d+1)/2``; the minimum-norm solution is the
    symmetric ``P_hat``.
    """
    gamma = check_gamma(gamma, allow_zero=True)
    X, R, X2 = _vector_data(data)
    d = X.shape[1]
    Phi = _lifted_features(X, gamma, sigma)
    Phi2 = _lifted_features(X2, gamma, sigma)
    C = Phi.T @ (Phi - gamma * Phi2)
    p = min_norm_solve(C, Phi.T @ R, required_rank=_sym_rank(d), what="quadratic LSTD matrix")
    return ValueEstimate(QUADRATIC, QuadraticValue(unvec(p, d), gamma, sigma), "lstd-quadratic", len(data))


def mb_lifted_lqr(data, gamma, sigma=1.0):
    """Plug-in estimate in the lifted space with an unconstrained ``d^2 x d^2`` dynamics fit.

    ``M_hat`` regresses next lifted features on current ones, ``theta_hat``
    regresses rewards on them, and ``vec(P_hat) = (I - gamma M_hat^T)^{-1} theta_hat``.
    """
    gamma = check_gamma(gamma, allow_zero=True)
    X, R, X2 = _vector_data(data)
    d = X.shape[1]
    Phi = _lifted_features(X, gamma, sigma)
    Phi2 = _lifted_features(X2, gamma, sigma)
    r = _sym_rank(d)
    M_hat = min_norm_solve(Phi, Phi2, required_rank=r, what="lifted design matrix").T
    theta_hat = min_norm_solve(Phi, R, required_rank=r, what="lifted design matrix")
    p = np.linalg.solve(np.eye(d * d) - gamma * M_hat.T, theta_hat)
    return ValueEstimate(QUADRATIC, QuadraticValue(unvec(p, d), gamma, sigma), "mb-lifted-lqr", len(data),
                         {"M_hat": M_hat, "theta_hat": theta_hat})


def mb_lqr(data, gamma, sigma=1.0):
    """Plug-in LQR estimate: least-squares ``A_hat`` and ``Q_hat``, then the Lyapunov solve.

    ``Q_hat`` is the minimum-norm regression of rewards on ``vec(x x^T)``
    with no symmetry constraint imposed.
    """
    gamma = check_gamma(gamma)
    X, R, X2 = _vector_data(data)
    d = X.shape[1]
    A_hat = fit_linear_dynamics(X, X2)
    q = min_norm_solve(lift_states(X), R, required_rank=_sym_rank(d), what="lifted design matrix")
    Q_hat = unvec(q, d)
    rho = spectral_radius(A_hat)
    if gamma * rho**2 >= 1.0:
        raise UnstableModelError(f"fitted dynamics give gamma*rho(A_hat)^2 = {gamma * rho**2:.4g} >= 1")
    value = lqr_value_matrix(A_hat, Q_hat, gamma, sigma)
    return ValueEstimate(QUADRATIC, value, "mb-lqr", len(data), {"A_hat": A_hat, "Q_hat": Q_hat})


# tabular / separable features ------------------------------------------------

def _tabular_data(data, dims=None):
    if data.kind != TABULAR:
        raise ValueError(f"estimator needs tabular states, got {data.kind}")
    dims = tuple(int(N) for N in (dims if dims is not None else data.dims))
    if len(dims) != data.dim:
        raise ValueError(f"dims {dims} do not match {data.dim} state components")
    if np.any(data.states.max(axis=0) >= dims) or np.any(data.next_states.max(axis=0) >= dims):
        raise ValueError(f"state index out of range for dims {dims}")
    return data.states, data.rewards, data.next_states, dims


def one_hot_features(S, dims):
    """Sparse ``n x sum(N_i)`` design of concatenated per-component indicators."""
    n, d = S.shape
    offsets = np.concatenate([[0], np.cumsum(dims)[:-1]])
    cols = (S + offsets).ravel()
    rows = np.repeat(np.arange(n), d)
    return sp.csr_matrix((np.ones(n * d), (rows, cols)), shape=(n, int(sum(dims))))


def _split(w, dims):
    return tuple(np.split(np.asarray(w, dtype=float), np.cumsum(dims)[:-1]))


def lstd_separable(data, gamma, dims=None):
    """LSTD over separable values ``sum_i V_i(s_i)`` with one-hot features.

    The design has exactly ``d - 1`` null directions (each block of
    indicators sums to the constant feature), so the returned weights are
    the minimum-norm LSTD solution; only the joint value is identified.
    """
    gamma = check_gamma(gamma, allow_zero=True)
    S, R, S2, dims = _tabular_data(data, dims)
    Phi = one_hot_features(S, dims)
    Phi2 = one_hot_features(S2, dims)
    C = (Phi.T @ (Phi - gamma * Phi2)).toarray()
    required = int(sum(dims)) - (len(dims) - 1)
    w = min_norm_solve(C, Phi.T @ R, required_rank=required, what="separable LSTD matrix")
    return ValueEstimate(SEPARABLE, SeparableValue(_split(w, dims)), "lstd-separable", len(data), {"dims": dims})


def empirical_kernel(s, s2, N):
    """Row-normalized transition counts; unvisited rows come back uniform.

    Returns ``(P_hat, visited)`` where ``visited[k]`` says whether state
    ``k`` was ever left.
    """
    counts = np.zeros((N, N))
    np.add.at(counts, (s, s2), 1.0)
    totals = counts.sum(axis=1)
    visited = totals > 0
    P = np.full((N, N), 1.0 / N)
    P[visited] = counts[visited] / totals[visited, None]
    return P, visited


def mb_decoupled(data, gamma, dims=None, on_unvisited="flag"):
    """Certainty-equivalence estimate that uses the product structure.

    Each component kernel is estimated from its own transition counts; the
    mean rewards come from one minimum-norm regression on the same one-hot
    design LSTD uses, sliced per component.  Unvisited component states get
    a uniform row and zero reward and are listed in ``extras["unvisited"]``
    (``on_unvisited="raise"`` turns that into UnvisitedStateError).
    """
    gamma = check_gamma(gamma)
    S, R, S2, dims = _tabular_data(data, dims)
    Phi = one_hot_features(S, dims).toarray()
    w = np.linalg.lstsq(Phi, R, rcond=RCOND)[0]
    r_tables = _split(w, dims)
    tables, unvisited = [], []
    for i, N in enumerate(dims):
        P_i, visited = empirical_kernel(S[:, i], S2[:, i], N)
        if not visited.all():
            missing = np.flatnonzero(~visited)
            if on_unvisited == "raise":
                raise UnvisitedStateError(f"component {i} never leaves states {missing.tolist()}")
            unvisited.extend((i, int(k)) for k in missing)
        r_i = np.where(visited, r_tables[i], 0.0)
        tables.append(exact_value(TabularMRP(P_i, r_i, gamma)))
    return ValueEstimate(SEPARABLE, SeparableValue(tuple(tables)), "mb-decoupled", len(data),
                         {"dims": dims, "unvisited": unvisited})


def mb_tabular_joint(data, gamma, dims=None):
    """Certainty equivalence on the full product space, ignoring decoupling.

    Only for product spaces of at most 1e4 states.
    """
    gamma = check_gamma(gamma)
    S, R, S2, dims = _tabular_data(data, dims)
    size = int(np.prod(dims))
    if size > 10**4:
        raise ValueError(f"joint space of {size} states exceeds the 1e4 limit")
    s, s2 = joint_index(S, dims), joint_index(S2, dims)
    P, visited = empirical_kernel(s, s2, size)
    sums = np.bincount(s, weights=R, minlength=size)
    counts = np.bincount(s, minlength=size)
    r = np.where(visited, sums / np.maximum(counts, 1), 0.0)
    V = exact_value(TabularMRP(P, r, gamma))
    unvisited = np.flatnonzero(~visited).tolist()
    return ValueEstimate(TABULAR_V, V, "mb-joint", len(data), {"dims": dims, "unvisited": unvisited})


ESTIMATORS = {
    "lstd-linear": lstd_linear,
    "mb-linear": lambda data, gamma: mb_linear(data, gamma, UNCONSTRAINED),
    "mb-diagonal": lambda data, gamma: mb_linear(data, gamma, DIAGONAL),
    "lstd-quadratic": lstd_quadratic,
    "mb-lqr": mb_lqr,
    "mb-lifted-lqr": mb_lifted_lqr,
    "lstd-separable": lstd_separable,
    "mb-decoupled": mb_decoupled,
    "mb-joint": mb_tabular_joint,
}
VECTOR_ESTIMATORS = ("lstd-linear", "mb-linear", "mb-diagonal", "lstd-quadratic", "mb-lqr", "mb-lifted-lqr")
