"""Gaussian and Student-t copulas: densities, information content, samplers.

All information quantities are in nats.
"""
from dataclasses import dataclass
import math

import numpy as np

from .special import (
    DomainError,
    digamma,
    log_beta,
    log_gamma,
    std_normal_cdf,
    std_normal_quantile,
    student_t_cdf,
    student_t_quantile,
)

__all__ = [
    "GaussianCopula",
    "StudentTCopula",
    "copula_log_density",
    "copula_density",
    "copula_log_likelihood",
    "mi_gaussian",
    "excess_information",
    "mi_t",
    "student_entropy",
    "mi_t_multivariate",
    "correlation_matrix",
    "sample_copula",
    "Uniform",
    "Gaussian",
    "StudentT",
    "LogNormal",
    "parse_marginal",
    "apply_marginals",
]


def _check_rho(rho):
    rho = float(rho)
    if not -1.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (-1, 1), got {rho}")
    return rho


def _check_nu(nu):
    nu = float(nu)
    if not nu > 0:
        raise DomainError(f"nu must be positive, got {nu}")
    return nu


@dataclass(frozen=True)
class GaussianCopula:
    rho: float

    def __post_init__(self):
        _check_rho(self.rho)


@dataclass(frozen=True)
class StudentTCopula:
    rho: float
    nu: float

    def __post_init__(self):
        _check_rho(self.rho)
        _check_nu(self.nu)


def _unit_open(u, name):
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise DomainError(f"{name} must lie strictly inside (0, 1)")
    return u


def copula_log_density(model, u, v):
    """Log copula density ln c(u, v), evaluated entirely in log space."""
    u = _unit_open(u, "u")
    v = _unit_open(v, "v")
    scalar = u.ndim == 0 and v.ndim == 0
    rho = model.rho
    one_m = 1.0 - rho * rho
    if isinstance(model, GaussianCopula):
        a = std_normal_quantile(u)
        b = std_normal_quantile(v)
        out = (-0.5 * math.log(one_m)
               - (rho * rho * (a * a + b * b) - 2.0 * rho * a * b) / (2.0 * one_m))
    elif isinstance(model, StudentTCopula):
        nu = model.nu
        a = student_t_quantile(u, nu)
        b = student_t_quantile(v, nu)
        q = (a * a + b * b - 2.0 * rho * a * b) / one_m
        const = (log_gamma(0.5 * nu + 1.0) + log_gamma(0.5 * nu)
                 - 2.0 * log_gamma(0.5 * (nu + 1.0)) - 0.5 * math.log(one_m))
        out = (const - 0.5 * (nu + 2.0) * np.log1p(q / nu)
               + 0.5 * (nu + 1.0) * (np.log1p(a * a / nu) + np.log1p(b * b / nu)))
    else:
        raise TypeError(f"unsupported copula model {model!r}")
    return float(out) if scalar else np.asarray(out, dtype=float)


def copula_density(model, u, v):
    """Copula density c(u, v) of a Gaussian or Student-t copula."""
    return np.exp(copula_log_density(model, u, v))


def copula_log_likelihood(model, u, v=None):
    """Mean log copula density over pseudo-observations (nats per pair)."""
    if v is None:
        arr = np.asarray(u, dtype=float)
        u, v = arr[:, 0], arr[:, 1]
    u = np.asarray(u, dtype=float)
    if u.size == 0:
        raise ValueError("no pseudo-observations")
    return float(np.mean(copula_log_density(model, u, v)))


def mi_gaussian(rho):
    """Mutual information of a Gaussian copula, -ln(1 - rho^2) / 2."""
    rho = _check_rho(rho)
    return -0.5 * math.log1p(-rho * rho)


# Coefficients of x^2 .. x^9, x = 1/nu, of the large-nu expansion of the excess.
_EXCESS_SERIES = (1 / 2, -1 / 3, -1 / 4, 3 / 5, 1 / 2, -17 / 7, -17 / 8, 155 / 9)


def excess_information(nu):
    """Information of a bivariate Student-t copula beyond the Gaussian part.

    Depends on the degrees of freedom only; decreases strictly to 0 as
    ``nu`` grows.  For ``nu >= 40`` the closed form loses digits to cancellation,
    so its asymptotic series in ``1/nu`` is summed instead.
    """
    nu = _check_nu(nu)
    if nu >= 40.0:
        x = 1.0 / nu
        acc = 0.0
        for c in reversed(_EXCESS_SERIES):
            acc = acc * x + c
        return acc * x * x
    # 2 ln(sqrt(nu / 2pi) B(nu/2, 1/2)) - (2 + nu)/nu
    #   + (1 + nu) [psi((nu + 1)/2) - psi(nu/2)]
    log_term = math.log(nu / (2.0 * math.pi)) + 2.0 * log_beta(0.5 * nu, 0.5)
    psi_gap = digamma(0.5 * (nu + 1.0)) - digamma(0.5 * nu)
    return log_term - (2.0 + nu) / nu + (1.0 + nu) * psi_gap


def mi_t(rho, nu):
    """Mutual information of a bivariate Student-t copula."""
    return mi_gaussian(rho) + excess_information(nu)


def correlation_matrix(matrix):
    """Validate a correlation matrix; returns it with its Cholesky factor."""
    sigma = np.atleast_2d(np.asarray(matrix, dtype=float))
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise DomainError("correlation matrix must be square")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12):
        raise DomainError("correlation matrix must be symmetric")
    if not np.all(np.diag(sigma) == 1.0):
        raise DomainError("correlation matrix must have unit diagonal")
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise DomainError("correlation matrix is not positive definite") from None
    return sigma, chol


def _log_det(chol):
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def student_entropy(sigma, nu):
    """Differential entropy of the standard d-variate Student-t distribution.

    Parameters
    ----------
    sigma : array_like, shape (d, d)
        Correlation matrix.
    nu : float
        Degrees of freedom.
    """
    nu = _check_nu(nu)
    sigma, chol = correlation_matrix(sigma)
    d = sigma.shape[0]
    return (0.5 * (d * math.log(math.pi * nu) + _log_det(chol))
            + log_beta(0.5 * nu, 0.5 * d) - log_gamma(0.5 * d)
            + 0.5 * (nu + d) * (digamma(0.5 * (nu + d)) - digamma(0.5 * nu)))


def mi_t_multivariate(sigma, nu):
    """Total correlation (multi-information) of a d-variate Student-t law."""
    nu = _check_nu(nu)
    sigma, chol = correlation_matrix(sigma)
    d = sigma.shape[0]
    if d < 2:
        raise DomainError("mutual information needs d >= 2")
    log_brace = (d * log_beta(0.5 * nu, 0.5) + log_gamma(0.5 * d)
                 - 0.5 * d * math.log(math.pi) - log_beta(0.5 * nu, 0.5 * d))
    return (-0.5 * _log_det(chol) + log_brace
            - 0.5 * nu * (d - 1) * digamma(0.5 * nu)
            + 0.5 * d * (nu + 1.0) * digamma(0.5 * (nu + 1.0))
            - 0.5 * (nu + d) * digamma(0.5 * (nu + d)))


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_copula(model, n, seed=None):
    """Draw ``n`` pairs from a Gaussian or Student-t copula.

    Uses numpy's PCG64 generator.  The chi-square mixing variable of the
    t copula comes from ``Generator.standard_gamma``, which handles shape
    parameters below one, so any real ``nu > 0`` is supported.

    Returns
    -------
    u, v : ndarray
        Points in the open unit square.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _rng(seed)
    rho = model.rho
    z1 = rng.standard_normal(n)
    z2 = rho * z1 + math.sqrt(1.0 - rho * rho) * rng.standard_normal(n)
    if isinstance(model, GaussianCopula):
        u, v = std_normal_cdf(z1), std_normal_cdf(z2)
    elif isinstance(model, StudentTCopula):
        g = 2.0 * rng.standard_gamma(0.5 * model.nu, size=n)  # chi-square(nu)
        scale = np.sqrt(model.nu / g)
        u = student_t_cdf(z1 * scale, model.nu)
        v = student_t_cdf(z2 * scale, model.nu)
    else:
        raise TypeError(f"unsupported copula model {model!r}")
    # keep the square open when the cdf rounds to 0 or 1 in the far tails
    tiny = np.finfo(float).tiny
    u = np.clip(u, tiny, np.nextafter(1.0, 0.0))
    v = np.clip(v, tiny, np.nextafter(1.0, 0.0))
    return u, v


@dataclass(frozen=True)
class Uniform:
    def quantile(self, p):
        return np.asarray(p, dtype=float)


@dataclass(frozen=True)
class Gaussian:
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")

    def quantile(self, p):
        return self.mu + self.sigma * std_normal_quantile(p)


@dataclass(frozen=True)
class StudentT:
    nu: float

    def __post_init__(self):
        _check_nu(self.nu)

    def quantile(self, p):
        return student_t_quantile(p, self.nu)


@dataclass(frozen=True)
class LogNormal:
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")

    def quantile(self, p):
        return np.exp(self.mu + self.sigma * std_normal_quantile(p))


def parse_marginal(text):
    """Parse ``uniform``, ``gaussian[:mu,sigma]``, ``t:nu`` or ``lognormal[:mu,sigma]``."""
    name, _, args = text.strip().partition(":")
    name = name.lower()
    vals = [float(a) for a in args.split(",") if a.strip()] if args else []
    if name == "uniform" and not vals:
        return Uniform()
    if name in ("gaussian", "normal"):
        return Gaussian(*vals)
    if name in ("t", "student", "studentt") and len(vals) == 1:
        return StudentT(vals[0])
    if name == "lognormal":
        return LogNormal(*vals)
    raise ValueError(f"cannot parse marginal specification {text!r}")


def apply_marginals(u, v, mx, my):
    """Push pseudo-observations through marginal quantile functions."""
    return np.asarray(mx.quantile(u), dtype=float), np.asarray(my.quantile(v), dtype=float)
