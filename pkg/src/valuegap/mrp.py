"""Finite-state Markov reward processes and the transition-dataset container.

Values follow the Bellman convention ``V = r + gamma * P V``, i.e.
``V(s) = E[sum_{t>=0} gamma^t r(S_t) | S_0 = s]``: the reward attached to a
state is collected when the chain is in that state, including the start
state.  Every estimator in the package (LSTD, the plug-in estimators, the
linear and quadratic closed forms) uses this same convention.
"""
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_gamma, check_seed, check_stochastic
from .exceptions import ConvergenceError

TABULAR = "tabular"
VECTOR = "vector"


@dataclass(frozen=True)
class TabularMRP:
    """Finite MRP with row-stochastic kernel ``P``, state rewards ``r`` and discount."""

    P: np.ndarray
    r: np.ndarray
    gamma: float

    def __post_init__(self):
        P = check_stochastic(self.P)
        r = np.asarray(self.r, dtype=float).reshape(-1)
        if r.shape[0] != P.shape[0]:
            raise ValueError(f"reward vector has length {r.shape[0]}, kernel has {P.shape[0]} states")
        if not np.all(np.isfinite(r)):
            raise ValueError("reward vector contains non-finite entries")
        P, r = P.copy(), r.copy()
        P.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "gamma", check_gamma(self.gamma))

    @property
    def n_states(self):
        return self.P.shape[0]


@dataclass(frozen=True)
class TransitionDataset:
    """A batch of ``(state, reward, next_state)`` transitions.

    States are stored row-wise in 2-D arrays.  For ``kind="tabular"`` each
    column is one component's integer state index (a plain finite MRP has a
    single column) and ``dims`` records the component sizes.  For
    ``kind="vector"`` rows are real state vectors.
    """

    states: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    kind: str = VECTOR
    dims: tuple = field(default=None)

    def __post_init__(self):
        if self.kind not in (TABULAR, VECTOR):
            raise ValueError(f"unknown state kind {self.kind!r}")
        dtype = np.int64 if self.kind == TABULAR else float
        S = np.asarray(self.states)
        S2 = np.asarray(self.next_states)
        if S.ndim == 1:
            S = S[:, None]
        if S2.ndim == 1:
            S2 = S2[:, None]
        R = np.asarray(self.rewards, dtype=float).reshape(-1)
        if S.ndim != 2 or S.shape != S2.shape:
            raise ValueError(f"states {S.shape} and next_states {S2.shape} must share one 2-D shape")
        if S.shape[0] != R.shape[0]:
            raise ValueError(f"{S.shape[0]} states but {R.shape[0]} rewards")
        if S.shape[0] == 0:
            raise ValueError("dataset is empty")
        if not np.all(np.isfinite(R)):
            raise ValueError("rewards contain non-finite entries")
        if self.kind == TABULAR:
            if not (np.all(S == np.round(S)) and np.all(S2 == np.round(S2))):
                raise ValueError("tabular states must be integer indices")
            dims = self.dims
            if dims is None:
                dims = tuple(int(m) + 1 for m in np.maximum(S.max(axis=0), S2.max(axis=0)))
            dims = tuple(int(N) for N in dims)
            if len(dims) != S.shape[1]:
                raise ValueError(f"dims {dims} do not match {S.shape[1]} state components")
            if S.min() < 0 or S2.min() < 0 or np.any(S.max(axis=0) >= dims) or np.any(S2.max(axis=0) >= dims):
                raise ValueError(f"tabular state index out of range for dims {dims}")
            object.__setattr__(self, "dims", dims)
        elif not (np.all(np.isfinite(S)) and np.all(np.isfinite(S2))):
            raise ValueError("states contain non-finite entries")
        arrays = []
        for a in (S, R, S2):
            a = np.array(a, dtype=dtype if a is not R else float)
            a.flags.writeable = False
            arrays.append(a)
        object.__setattr__(self, "states", arrays[0])
        object.__setattr__(self, "rewards", arrays[1])
        object.__setattr__(self, "next_states", arrays[2])

    def __len__(self):
        return self.states.shape[0]

    @property
    def n(self):
        return self.states.shape[0]

    @property
    def dim(self):
        """Number of state columns (vector dimension or component count)."""
        return self.states.shape[1]

    def triples(self):
        """Iterate over ``(state, reward, next_state)`` tuples."""
        squeeze = self.kind == TABULAR and self.dim == 1
        for s, r, s2 in zip(self.states, self.rewards, self.next_states):
            if squeeze:
                yield int(s[0]), float(r), int(s2[0])
            else:
                yield s, float(r), s2


def exact_value(mrp):
    """Solve ``(I - gamma P) V = r`` for the value vector."""
    S = mrp.n_states
    V = np.linalg.solve(np.eye(S) - mrp.gamma * mrp.P, mrp.r)
    if not np.all(np.isfinite(V)):
        raise FloatingPointError("value solve produced non-finite entries")
    return V


def simulate_trajectory(mrp, start, n, noise_sd=1.0, seed=0):
    """Simulate ``n`` consecutive transitions from ``start``.

    The reward of each triple is ``r(state) + noise_sd * N(0, 1)``.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    if noise_sd < 0:
        raise ValueError("noise_sd must be non-negative")
    start = int(start)
    if not 0 <= start < mrp.n_states:
        raise ValueError(f"start state {start} out of range")
    rng = np.random.default_rng(check_seed(seed))
    u = rng.random(n)
    noise = rng.standard_normal(n)
    path = _walk(mrp.P, start, u)
    rewards = mrp.r[path[:-1]] + noise_sd * noise
    return TransitionDataset(path[:-1], rewards, path[1:], kind=TABULAR, dims=(mrp.n_states,))


def _walk(P, start, u):
    """Inverse-CDF chain walk driven by uniforms ``u``; returns ``len(u)+1`` states."""
    cdf = np.cumsum(P, axis=1)
    cdf[:, -1] = 1.0
    path = np.empty(len(u) + 1, dtype=np.int64)
    path[0] = s = start
    for t, ut in enumerate(u):
        s = int(np.searchsorted(cdf[s], ut, side="right"))
        path[t + 1] = s
    return path


def stationary_distribution(P, tol=1e-12, max_squarings=64):
    """Stationary distribution of an irreducible aperiodic kernel.

    Runs power iteration on the kernel itself by repeated squaring; the rows
    of ``P^(2^k)`` collapse onto ``pi`` exactly when the chain is ergodic.
    Raises ConvergenceError for periodic or reducible chains (rows never
    agree).
    """
    P = check_stochastic(P)
    Q = P.copy()
    for _ in range(max_squarings):
        Q = Q @ Q
        Q /= Q.sum(axis=1, keepdims=True)
        if np.abs(Q - Q[0]).max() < tol:
            break
    else:
        raise ConvergenceError("power iteration did not converge: chain is periodic or reducible")
    pi = Q.mean(axis=0)
    for _ in range(3):
        pi = pi @ P
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()
