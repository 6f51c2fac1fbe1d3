"""Closed-form limits of ``n * E||beta_hat - beta||^2`` for the linear estimators.

Both limits are invariant to the noise scale: ``P_inf`` scales with
``sigma^2`` and cancels the ``sigma^2`` of the regression noise.
"""
from dataclasses import dataclass

import numpy as np

from ._validation import check_gamma, check_square
from .exceptions import UnstableModelError
from .linear import stationary_covariance, true_beta


@dataclass(frozen=True)
class AsymptoticMse:
    value: float
    estimator: str
    instance: str = ""

    def __float__(self):
        return self.value


def _describe(A, theta, gamma, sigma):
    return f"d={A.shape[0]} rho(A)={np.max(np.abs(np.linalg.eigvals(A))):.4g} |theta|={np.linalg.norm(theta):.4g} gamma={gamma} sigma={sigma}"


def asymptotic_mse_general(A, theta, gamma, sigma=1.0):
    """Limit for LSTD (equivalently the unconstrained plug-in).

    ``sigma^2 (gamma^2 ||beta||^2 + 1) ||P_inf^{-1/2} (I - gamma A)^{-1}||_F^2``
    """
    A = check_square(A, "dynamics matrix")
    theta = np.asarray(theta, dtype=float).reshape(-1)
    gamma = check_gamma(gamma)
    d = A.shape[0]
    P_inf = stationary_covariance(A, sigma)
    beta = true_beta(A, theta, gamma)
    B = np.linalg.inv(np.eye(d) - gamma * A)
    # ||P^{-1/2} B||_F^2 = tr(B^T P^{-1} B)
    frob2 = float(np.trace(B.T @ np.linalg.solve(P_inf, B)))
    value = sigma**2 * (gamma**2 * float(beta @ beta) + 1.0) * frob2
    return AsymptoticMse(value, "lstd-linear", _describe(A, theta, gamma, sigma))


def asymptotic_mse_diag(A, theta, gamma, sigma=1.0):
    """Limit for the diagonal-constrained plug-in.

    ``sum_i (gamma^2 theta_i^2 / (1 - gamma a_i)^2 + 1) (1 - a_i^2) / (1 - gamma a_i)^2``
    """
    A = check_square(A, "dynamics matrix")
    if np.any(A != np.diag(np.diag(A))):
        raise ValueError("asymptotic_mse_diag needs a diagonal dynamics matrix")
    a = np.diag(A)
    if np.any(np.abs(a) >= 1.0):
        raise UnstableModelError("diagonal dynamics must have |a_i| < 1")
    theta = np.asarray(theta, dtype=float).reshape(-1)
    gamma = check_gamma(gamma)
    g = (1.0 - gamma * a) ** 2
    value = float(np.sum((gamma**2 * theta**2 / g + 1.0) * (1.0 - a**2) / g))
    return AsymptoticMse(value, "mb-diagonal", _describe(A, theta, gamma, sigma))


def dls_gap_ratio(d, lam, gamma):
    """Limiting MSE ratio of LSTD to the diagonal plug-in for ``A = lam I``, ``theta = 1``."""
    if not (0.0 < lam < 1.0 and 0.0 < gamma < 1.0):
        raise ValueError("need 0 < lam, gamma < 1")
    k = gamma**2 / (1.0 - gamma * lam) ** 2
    return (d * k + 1.0) / (k + 1.0)


def kron_cov_contract(B, C, theta):
    """``Cov(M theta) = (theta^T C theta) B`` when ``Cov(vec(M^T)) = kron(B, C)``."""
    B = check_square(B, "B")
    C = check_square(C, "C")
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != C.shape[0]:
        raise ValueError("theta does not match C")
    return float(theta @ C @ theta) * B
