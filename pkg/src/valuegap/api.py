"""scikit-learn style wrappers around the functional estimators.

Transitions are passed as ``fit(X, y, X_next)``: ``X`` holds the states,
``y`` the observed rewards and ``X_next`` the successor states.  ``predict``
returns estimated values at new states.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_consistent_length, check_is_fitted

from . import estimators as est
from .linear import lift_states, vec
from .mrp import TABULAR, VECTOR, TransitionDataset


def _check_transitions(X, y, X_next, tabular=False):
    dtype = np.int64 if tabular else np.float64
    X = check_array(X, dtype=dtype, ensure_2d=False)
    X_next = check_array(X_next, dtype=dtype, ensure_2d=False)
    y = check_array(y, ensure_2d=False, dtype=np.float64)
    check_consistent_length(X, y, X_next)
    if X.ndim == 1:
        X, X_next = X[:, None], X_next[:, None]
    if X.shape != X_next.shape:
        raise ValueError(f"X {X.shape} and X_next {X_next.shape} must have the same shape")
    return X, y.ravel(), X_next


class _ValueEstimatorBase(BaseEstimator):
    _tabular = False

    def _dataset(self, X, y, X_next):
        X, y, X_next = _check_transitions(X, y, X_next, self._tabular)
        if self._tabular:
            return TransitionDataset(X, y, X_next, kind=TABULAR, dims=self.dims)
        return TransitionDataset(X, y, X_next, kind=VECTOR)

    def fit(self, X, y, X_next):
        data = self._dataset(X, y, X_next)
        self.estimate_ = self._fit(data)
        self.n_features_in_ = data.dim
        self.coef_ = self.estimate_.coef
        return self

    def predict(self, X):
        check_is_fitted(self, "estimate_")
        X = check_array(X, dtype=np.int64 if self._tabular else np.float64, ensure_2d=False)
        if X.ndim == 1:
            X = X[:, None] if self.n_features_in_ == 1 else X[None, :]
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, estimator was fitted with {self.n_features_in_}")
        return np.asarray(self.estimate_(X), dtype=float)


class LSTD(_ValueEstimatorBase):
    """Batch LSTD.

    Parameters
    ----------
    gamma : float
        Discount factor in (0, 1).
    features : {"linear", "quadratic"}
        Value class ``beta^T x`` or ``tr((x x^T + c I) P)``.
    sigma : float
        Noise scale entering the quadratic offset ``c = gamma sigma^2/(1-gamma)``.
    """

    def __init__(self, gamma=0.9, features="linear", sigma=1.0):
        self.gamma = gamma
        self.features = features
        self.sigma = sigma

    def _fit(self, data):
        if self.features == "linear":
            return est.lstd_linear(data, self.gamma)
        if self.features == "quadratic":
            return est.lstd_quadratic(data, self.gamma, self.sigma)
        raise ValueError(f"unknown features {self.features!r}")


class SeparableLSTD(_ValueEstimatorBase):
    """LSTD over separable tabular values; ``X`` rows are component indices."""

    _tabular = True

    def __init__(self, gamma=0.9, dims=None):
        self.gamma = gamma
        self.dims = dims

    def _fit(self, data):
        return est.lstd_separable(data, self.gamma)


class ModelBasedLinear(_ValueEstimatorBase):
    """Plug-in estimator for linear systems with linear rewards."""

    def __init__(self, gamma=0.9, constraint="unconstrained"):
        self.gamma = gamma
        self.constraint = constraint

    def _fit(self, data):
        e = est.mb_linear(data, self.gamma, self.constraint)
        self.A_ = e.extras["A_hat"]
        self.theta_ = e.extras["theta_hat"]
        return e


class ModelBasedLQR(_ValueEstimatorBase):
    """Plug-in estimator for quadratic rewards.

    ``lifted=False`` fits ``A`` and ``Q`` and solves the Lyapunov equation;
    ``lifted=True`` fits an unconstrained ``d^2 x d^2`` lifted dynamics
    matrix, which reproduces quadratic LSTD exactly.
    """

    def __init__(self, gamma=0.9, lifted=False, sigma=1.0):
        self.gamma = gamma
        self.lifted = lifted
        self.sigma = sigma

    def _fit(self, data):
        if self.lifted:
            return est.mb_lifted_lqr(data, self.gamma, self.sigma)
        e = est.mb_lqr(data, self.gamma, self.sigma)
        self.A_ = e.extras["A_hat"]
        self.Q_ = e.extras["Q_hat"]
        return e


class DecoupledModelBased(_ValueEstimatorBase):
    """Certainty equivalence with per-component kernels."""

    _tabular = True

    def __init__(self, gamma=0.9, dims=None):
        self.gamma = gamma
        self.dims = dims

    def _fit(self, data):
        e = est.mb_decoupled(data, self.gamma)
        self.unvisited_ = e.extras["unvisited"]
        return e


class KroneckerLift(TransformerMixin, BaseEstimator):
    """Map states ``x`` to ``vec(x x^T) + offset * vec(I)``."""

    def __init__(self, offset=0.0):
        self.offset = offset

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, transformer was fitted with {self.n_features_in_}")
        return lift_states(X) + self.offset * vec(np.eye(X.shape[1]))
