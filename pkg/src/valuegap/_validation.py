"""Input validation helpers shared across modules."""
import numpy as np

from .exceptions import RankDeficiencyError

# singular values below RCOND * largest are treated as zero
RCOND = 1e-10


def check_gamma(gamma, allow_zero=False):
    gamma = float(gamma)
    if not (0.0 <= gamma if allow_zero else 0.0 < gamma) or not gamma < 1.0:
        interval = "[0, 1)" if allow_zero else "(0, 1)"
        raise ValueError(f"gamma must lie in {interval}, got {gamma}")
    return gamma


def check_square(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be a square 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def check_stochastic(P, atol=1e-12):
    P = check_square(P, "transition matrix")
    if np.any(P < 0):
        raise ValueError("transition matrix has negative entries")
    row_err = np.abs(P.sum(axis=1) - 1.0).max()
    if row_err > atol:
        raise ValueError(f"transition matrix rows must sum to 1 (max error {row_err:.3g})")
    return P


def check_seed(seed):
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def spectral_radius(A):
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def min_norm_solve(A, b, required_rank=None, what="system"):
    """Minimum-norm least-squares solution of ``A x = b`` via SVD.

    Raises RankDeficiencyError when the numerical rank falls below
    ``required_rank`` (defaults to the number of columns).
    """
    A = np.asarray(A, dtype=float)
    if required_rank is None:
        required_rank = A.shape[1]
    x, _, rank, _ = np.linalg.lstsq(A, b, rcond=RCOND)
    if rank < required_rank:
        raise RankDeficiencyError(
            f"{what} has numerical rank {rank}, needs {required_rank}",
            rank=rank, required=required_rank)
    return x
