"""T-copula identification from the (Kendall's tau, mutual information) plane.

Kendall's tau fixes the correlation parameter through rho = sin(pi tau / 2);
the mutual information in excess of the Gaussian value for that rho depends
only on the degrees of freedom and is inverted for nu.
"""
from dataclasses import dataclass
import math

import numpy as np

from .copula import (
    GaussianCopula,
    StudentTCopula,
    copula_log_likelihood,
    excess_information,
    mi_gaussian,
)
from .ksg import KsgConfig, MiEstimate, bootstrap_mi
from .rank import as_pairs, kendall_tau, pseudo_observations, spearman_rho, tau_to_rho
from .special import DomainError

__all__ = [
    "NU_MIN",
    "NU_MAX",
    "MIN_OBSERVATIONS",
    "InsufficientDataError",
    "ExcessOutOfRangeError",
    "invert_excess",
    "FitReport",
    "GaussianityResult",
    "fit_t_copula",
    "gaussianity_test",
]

NU_MIN = 0.5
NU_MAX = 1e6
MIN_OBSERVATIONS = 100


class InsufficientDataError(ValueError):
    """Sample below the reliability floor of the identification procedure."""


class ExcessOutOfRangeError(DomainError):
    """Information excess above the largest value reachable for nu >= NU_MIN."""


def invert_excess(excess, nu_min=NU_MIN, tol=1e-13):
    """Degrees of freedom whose T-copula excess information equals ``excess``.

    Bisection on ``log(nu)`` over ``[nu_min, NU_MAX]``, using that the excess
    is strictly decreasing.  Returns ``math.inf`` (the Gaussian copula) for
    ``excess <= 0`` or an excess below the value at ``NU_MAX``.

    Raises
    ------
    ExcessOutOfRangeError
        If ``excess`` exceeds ``excess_information(nu_min)``.
    """
    excess = float(excess)
    if math.isnan(excess):
        raise DomainError("excess is NaN")
    if excess <= 0.0:
        return math.inf
    ceiling = excess_information(nu_min)
    if excess > ceiling:
        raise ExcessOutOfRangeError(
            f"excess {excess:.6g} nats exceeds the ceiling {ceiling:.6g} nats "
            f"reached at nu = {nu_min}")
    if excess < excess_information(NU_MAX):
        return math.inf
    lo = math.log(nu_min)
    hi = math.log(NU_MAX)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if excess_information(math.exp(mid)) > excess:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


@dataclass(frozen=True)
class GaussianityResult:
    excess: float
    excess_ci: tuple
    excess_lower: float
    level: float
    is_gaussian: bool


@dataclass(frozen=True)
class FitReport:
    """Outcome of :func:`fit_t_copula`.

    ``nu_hat`` is ``math.inf`` when the data are judged Gaussian.
    ``excess_lower`` is the one-sided lower confidence bound used for that
    decision; ``excess_ci`` is the two-sided interval translated from the MI
    interval.
    """

    n: int
    tau: float
    rho_hat: float
    spearman: float
    mi: MiEstimate
    excess: float
    excess_ci: tuple
    excess_lower: float
    is_gaussian: bool
    nu_hat: float
    loglik_at_fit: float
    kl_diagnostic: float

    @property
    def model(self):
        if math.isinf(self.nu_hat):
            return GaussianCopula(self.rho_hat)
        return StudentTCopula(self.rho_hat, self.nu_hat)

    def to_dict(self):
        """Flat, JSON-ready mapping (``nu_hat`` is ``None`` for a Gaussian verdict)."""
        out = {
            "n": self.n,
            "tau": self.tau,
            "rho_hat": self.rho_hat,
            "spearman_rho": self.spearman,
            "mi": self.mi.value,
            "ci_low": self.mi.ci_low,
            "ci_high": self.mi.ci_high,
            "level": self.mi.level,
            "excess": self.excess,
            "excess_ci_low": self.excess_ci[0],
            "excess_ci_high": self.excess_ci[1],
            "excess_lower": self.excess_lower,
            "is_gaussian": self.is_gaussian,
            "nu_hat": None if math.isinf(self.nu_hat) else self.nu_hat,
            "verdict": "gaussian" if math.isinf(self.nu_hat) else "student-t",
            "loglik_at_fit": self.loglik_at_fit,
            "kl_diagnostic": self.kl_diagnostic,
            "k": self.mi.k,
            "transform": self.mi.transform,
            "replicates": self.mi.replicates,
            "seed": self.mi.seed,
            "method": self.mi.method,
            "units": "nats",
        }
        return out


def _excess_summary(x, y, cfg, replicates, level, seed, workers, method):
    if x.size < MIN_OBSERVATIONS:
        raise InsufficientDataError(
            f"n = {x.size} is below the reliability floor of {MIN_OBSERVATIONS} pairs")
    tau = kendall_tau(x, y)
    if abs(tau) >= 1.0:
        raise DomainError("|tau| = 1: the sample is perfectly (anti-)monotone")
    rho_hat = tau_to_rho(tau)
    est, reps = bootstrap_mi(x, y, cfg, replicates=replicates, level=level,
                             seed=seed, method=method, workers=workers,
                             return_replicates=True)
    gauss = mi_gaussian(rho_hat)
    excess = est.value - gauss
    excess_ci = (est.ci_low - gauss, est.ci_high - gauss)
    excess_lower = float(np.quantile(np.sort(reps), 1.0 - level)) - gauss
    return tau, rho_hat, est, excess, excess_ci, excess_lower


def gaussianity_test(x, y=None, cfg=None, replicates=200, level=0.90, seed=1,
                     *, method="split", workers=1):
    """Test for information excess over the Gaussian copula with the same tau.

    The sample is called Gaussian when the one-sided lower confidence bound
    of the excess (at ``level``) does not exceed zero.
    """
    x, y = as_pairs(x, y)
    cfg = cfg or KsgConfig()
    _, _, _, excess, excess_ci, lower = _excess_summary(
        x, y, cfg, replicates, level, seed, workers, method)
    return GaussianityResult(excess=excess, excess_ci=excess_ci, excess_lower=lower,
                             level=level, is_gaussian=lower <= 0.0)


def fit_t_copula(x, y=None, cfg=None, replicates=200, level=0.90, seed=1,
                 *, force_nu=False, method="split", workers=1):
    """Identify the best-matching Student-t copula for a bivariate sample.

    Parameters
    ----------
    x, y : array_like
        The sample; at least ``MIN_OBSERVATIONS`` pairs.
    cfg : KsgConfig, optional
        Mutual-information estimator settings.
    replicates, level, seed : bootstrap settings
    method : {"split", "terms"}
        Bootstrap scheme, see :func:`copulainfo.ksg.bootstrap_mi`.
    force_nu : bool
        Invert the excess for ``nu`` even when the Gaussian copula is not
        rejected (a non-positive excess still gives ``inf``).

    Returns
    -------
    FitReport
    """
    x, y = as_pairs(x, y)
    cfg = cfg or KsgConfig()
    tau, rho_hat, est, excess, excess_ci, lower = _excess_summary(
        x, y, cfg, replicates, level, seed, workers, method)
    is_gaussian = lower <= 0.0
    nu_hat = math.inf
    if not is_gaussian or force_nu:
        try:
            nu_hat = invert_excess(excess)
        except ExcessOutOfRangeError:
            nu_hat = NU_MIN
    u, v = pseudo_observations(x, y)
    model = GaussianCopula(rho_hat) if math.isinf(nu_hat) else StudentTCopula(rho_hat, nu_hat)
    loglik = copula_log_likelihood(model, u, v)
    return FitReport(
        n=int(x.size), tau=tau, rho_hat=rho_hat, spearman=spearman_rho(x, y),
        mi=est, excess=excess, excess_ci=excess_ci, excess_lower=lower,
        is_gaussian=is_gaussian, nu_hat=nu_hat, loglik_at_fit=loglik,
        kl_diagnostic=est.value - loglik,
    )
