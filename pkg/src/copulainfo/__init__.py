"""Marginal-invariant dependence measurement with copulas and mutual information."""
from .copula import (
    GaussianCopula,
    StudentTCopula,
    copula_density,
    copula_log_density,
    copula_log_likelihood,
    excess_information,
    mi_gaussian,
    mi_t,
    mi_t_multivariate,
    sample_copula,
    student_entropy,
)
from .identify import FitReport, fit_t_copula, gaussianity_test, invert_excess
from .ksg import KsgConfig, MiEstimate, bootstrap_mi, ksg_mi
from .rank import (
    kendall_tau,
    pseudo_observations,
    rank_to_rho_gaussian,
    spearman_rho,
    tau_to_rho,
)
from .special import DomainError

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "FitReport",
    "GaussianCopula",
    "KsgConfig",
    "MiEstimate",
    "StudentTCopula",
    "bootstrap_mi",
    "copula_density",
    "copula_log_density",
    "copula_log_likelihood",
    "excess_information",
    "fit_t_copula",
    "gaussianity_test",
    "invert_excess",
    "kendall_tau",
    "ksg_mi",
    "mi_gaussian",
    "mi_t",
    "mi_t_multivariate",
    "pseudo_observations",
    "rank_to_rho_gaussian",
    "sample_copula",
    "spearman_rho",
    "student_entropy",
    "tau_to_rho",
]
