"""Decoupled (product) MRPs whose components evolve independently.

Joint states are indexed in mixed radix with component 0 as the most
significant digit, so the joint kernel is ``kron(P_0, P_1, ..., P_{d-1})``.
"""
from dataclasses import dataclass
from functools import reduce

import numpy as np

from ._validation import check_gamma, check_seed, check_stochastic
from .mrp import TABULAR, TabularMRP, TransitionDataset, exact_value, stationary_distribution

MAX_PRODUCT_STATES = 10**6


@dataclass(frozen=True)
class DecoupledMRP:
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a decoupled MRP needs at least one component")
        gammas = {c.gamma for c in comps}
        if len(gammas) != 1:
            raise ValueError(f"components disagree on gamma: {sorted(gammas)}")
        if any(c.n_states < 2 for c in comps):
            raise ValueError("every component needs at least 2 states")
        object.__setattr__(self, "components", comps)

    @property
    def gamma(self):
        return self.components[0].gamma

    @property
    def d(self):
        return len(self.components)

    @property
    def dims(self):
        return tuple(c.n_states for c in self.components)

    def prefix(self, k):
        """The decoupled MRP made of the first ``k`` components."""
        return DecoupledMRP(self.components[:k])


@dataclass(frozen=True)
class SeparableValue:
    """Joint value ``V(s) = sum_i tables[i][s_i]``."""

    tables: tuple

    def __post_init__(self):
        tables = []
        for t in self.tables:
            t = np.array(t, dtype=float).reshape(-1)
            t.flags.writeable = False
            tables.append(t)
        object.__setattr__(self, "tables", tuple(tables))

    @property
    def dims(self):
        return tuple(len(t) for t in self.tables)

    def __call__(self, states):
        """Evaluate at one joint state (length-d index vector) or a batch (n, d)."""
        S = np.asarray(states, dtype=np.int64)
        single = S.ndim == 1
        S = np.atleast_2d(S)
        if S.shape[1] != len(self.tables):
            raise ValueError(f"expected {len(self.tables)} components, got {S.shape[1]}")
        out = np.zeros(S.shape[0])
        for i, t in enumerate(self.tables):
            out += t[S[:, i]]
        return out[0] if single else out

    def __sub__(self, other):
        if self.dims != other.dims:
            raise ValueError("separable values over different spaces")
        return SeparableValue(tuple(a - b for a, b in zip(self.tables, other.tables)))

    def to_joint(self):
        """Materialize the value on the full product space (mixed-radix order)."""
        if np.prod(self.dims, dtype=float) > MAX_PRODUCT_STATES:
            raise ValueError(f"product space {self.dims} too large to materialize")
        return reduce(lambda acc, t: np.add.outer(acc, t).ravel(), self.tables[1:], self.tables[0].copy())


def joint_index(states, dims):
    """Mixed-radix joint index of component index vectors."""
    return np.ravel_multi_index(tuple(np.asarray(states).T), dims)


def product_mrp(dmrp):
    """Materialize the product MRP on the joint state space."""
    dims = dmrp.dims
    if np.prod(dims, dtype=float) > MAX_PRODUCT_STATES:
        raise ValueError(f"product space of size {np.prod(dims, dtype=float):.3g} exceeds {MAX_PRODUCT_STATES}")
    comps = dmrp.components
    if len(comps) == 1:
        return comps[0]
    P = reduce(np.kron, (c.P for c in comps))
    r = reduce(lambda acc, c: np.add.outer(acc, c.r).ravel(), comps[1:], comps[0].r.copy())
    return TabularMRP(P, r, dmrp.gamma)


def separable_value(dmrp):
    """Per-component value tables; their sum is the joint value."""
    return SeparableValue(tuple(exact_value(c) for c in dmrp.components))


def reward_from_value(P, V, gamma, check=True):
    """Mean rewards under which kernel ``P`` has value exactly ``V``.

    ``r = (I - gamma P) V``.  With ``V`` separable and ``P`` arbitrary this
    builds a non-decoupled MRP whose value is still separable.
    """
    P = check_stochastic(P)
    V = np.asarray(V, dtype=float).reshape(-1)
    if V.shape[0] != P.shape[0]:
        raise ValueError(f"value has length {V.shape[0]}, kernel has {P.shape[0]} states")
    gamma = check_gamma(gamma)
    r = V - gamma * (P @ V)
    if check:
        err = np.abs(exact_value(TabularMRP(P, r, gamma)) - V).max()
        if err > 1e-9 * (1.0 + np.abs(V).max()):
            raise FloatingPointError(f"round trip through exact_value is off by {err:.3g}")
    return r


def simulate_decoupled(dmrp, n, seed=0, start=None):
    """Simulate ``n`` joint transitions with unit-variance Gaussian reward noise.

    ``start`` is a length-d index vector; by default each component's start
    state is drawn from its stationary distribution.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(check_seed(seed))
    d, dims = dmrp.d, dmrp.dims
    Nmax = max(dims)
    # pad with 2.0 so padded columns never satisfy cdf <= u
    cdf = np.full((d, Nmax, Nmax), 2.0)
    for i, c in enumerate(dmrp.components):
        Ni = c.n_states
        cdf[i, :Ni, :Ni] = np.cumsum(c.P, axis=1)
        cdf[i, :Ni, Ni - 1] = 1.0
    if start is None:
        u0 = rng.random(d)
        start = np.array([
            min(int(np.searchsorted(np.cumsum(stationary_distribution(c.P)), u0[i], side="right")), c.n_states - 1)
            for i, c in enumerate(dmrp.components)])
    else:
        start = np.asarray(start, dtype=np.int64).reshape(-1)
        if start.shape[0] != d or np.any(start < 0) or np.any(start >= dims):
            raise ValueError(f"start state {start} invalid for dims {dims}")
    u = rng.random((n, d))
    noise = rng.standard_normal(n)
    path = np.empty((n + 1, d), dtype=np.int64)
    path[0] = s = start
    comp = np.arange(d)
    for t in range(n):
        # count of cdf entries <= u is the inverse-CDF draw
        s = (cdf[comp, s] <= u[t][:, None]).sum(axis=1)
        path[t + 1] = s
    mean_r = np.zeros(n)
    for i, c in enumerate(dmrp.components):
        mean_r += c.r[path[:-1, i]]
    return TransitionDataset(path[:-1], mean_r + noise, path[1:], kind=TABULAR, dims=dims)


def mse_uniform_separable(delta):
    """``E[delta(s)^2]`` for ``s`` uniform over the product space, in O(sum N_i).

    For independent uniform components the sum has mean ``sum mu_i`` and
    variance ``sum v_i``.
    """
    mus = np.array([t.mean() for t in delta.tables])
    vs = np.array([t.var() for t in delta.tables])
    return float(mus.sum() ** 2 + vs.sum())


def random_decoupled_instance(d, N, seed=0, gamma=0.9):
    """Random decoupled MRP with ``d`` components of ``N`` states each.

    Kernels are row-normalized iid uniform(0, 1) matrices, mean rewards iid
    uniform(0, 1).  Component ``i`` depends only on ``(seed, i)``, so the
    instance for ``d`` is a prefix of the instance for any larger ``d``.
    """
    d, N = int(d), int(N)
    if d < 1 or N < 2:
        raise ValueError("need d >= 1 and N >= 2")
    children = np.random.SeedSequence(check_seed(seed)).spawn(d)
    comps = []
    for child in children:
        rng = np.random.default_rng(child)
        W = rng.random((N, N))
        r = rng.random(N)
        comps.append(TabularMRP(W / W.sum(axis=1, keepdims=True), r, gamma))
    return DecoupledMRP(tuple(comps))
