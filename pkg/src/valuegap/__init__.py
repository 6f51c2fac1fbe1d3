"""Model-free (LSTD) and model-based policy evaluation for Markov reward processes."""
from .api import LSTD, DecoupledModelBased, KroneckerLift, ModelBasedLinear, ModelBasedLQR, SeparableLSTD
from .asymptotics import (AsymptoticMse, asymptotic_mse_diag, asymptotic_mse_general, dls_gap_ratio,
                          kron_cov_contract)
from .decoupled import (DecoupledMRP, SeparableValue, mse_uniform_separable, product_mrp,
                        random_decoupled_instance, reward_from_value, separable_value, simulate_decoupled)
from .estimators import (ValueEstimate, lstd_linear, lstd_quadratic, lstd_separable, mb_decoupled,
                         mb_lifted_lqr, mb_linear, mb_lqr, mb_tabular_joint)
from .exceptions import (ConvergenceError, RankDeficiencyError, UnstableModelError, UnvisitedStateError,
                         ValueGapError)
from .harness import ExperimentConfig, ExperimentRow, confidence_interval, run_experiment, write_csv
from .linear import (LinearSystem, QuadraticValue, kron_dynamics, lift_dataset, lqr_value_matrix,
                     random_stable_matrix, simulate_linear, stationary_covariance, true_beta)
from .mrp import TabularMRP, TransitionDataset, exact_value, simulate_trajectory, stationary_distribution

__version__ = "0.1.0"

__all__ = [
    "AsymptoticMse",
    "ConvergenceError",
    "DecoupledMRP",
    "DecoupledModelBased",
    "ExperimentConfig",
    "ExperimentRow",
    "KroneckerLift",
    "LSTD",
    "LinearSystem",
    "ModelBasedLQR",
    "ModelBasedLinear",
    "QuadraticValue",
    "RankDeficiencyError",
    "SeparableLSTD",
    "SeparableValue",
    "TabularMRP",
    "TransitionDataset",
    "UnstableModelError",
    "UnvisitedStateError",
    "ValueEstimate",
    "ValueGapError",
    "asymptotic_mse_diag",
    "asymptotic_mse_general",
    "confidence_interval",
    "dls_gap_ratio",
    "exact_value",
    "kron_cov_contract",
    "kron_dynamics",
    "lift_dataset",
    "lqr_value_matrix",
    "lstd_linear",
    "lstd_quadratic",
    "lstd_separable",
    "mb_decoupled",
    "mb_lifted_lqr",
    "mb_linear",
    "mb_lqr",
    "mb_tabular_joint",
    "mse_uniform_separable",
    "product_mrp",
    "random_decoupled_instance",
    "random_stable_matrix",
    "reward_from_value",
    "run_experiment",
    "separable_value",
    "simulate_decoupled",
    "simulate_linear",
    "simulate_trajectory",
    "stationary_covariance",
    "stationary_distribution",
    "true_beta",
    "write_csv",
]
