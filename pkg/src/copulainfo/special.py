"""Special functions: log-gamma, digamma, beta, normal and Student-t laws.

Every function accepts scalars or array_like input and returns a float
(for scalar input) or an ndarray of the broadcast shape.  Domain violations
raise :class:`DomainError`.
"""
import math

import numpy as np

__all__ = [
    "DomainError",
    "log_gamma",
    "digamma",
    "log_beta",
    "betainc",
    "std_normal_cdf",
    "std_normal_quantile",
    "student_t_pdf",
    "student_t_logpdf",
    "student_t_cdf",
    "student_t_quantile",
]

EULER_GAMMA = 0.57721566490153286061


class DomainError(ValueError):
    """Argument outside the domain of a mathematical function."""


def _as_float_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


def _require_positive(name, arr):
    if np.any(~(arr > 0)):
        raise DomainError(f"{name} requires strictly positive arguments")


_lgamma_ufunc = np.frompyfunc(math.lgamma, 1, 1)
_erfc_ufunc = np.frompyfunc(math.erfc, 1, 1)


def log_gamma(x):
    """Natural log of the gamma function for ``x > 0``."""
    arr, scalar = _as_float_array(x)
    _require_positive("log_gamma", arr)
    out = np.asarray(_lgamma_ufunc(arr), dtype=float)
    return _ret(out, scalar)


# Bernoulli-number coefficients B_2k / (2k) of the digamma asymptotic series.
_DIGAMMA_ASYMPTOTIC = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def digamma(x):
    """Digamma function psi(x) = d/dx ln Gamma(x) for ``x > 0``.

    Arguments below 6 are shifted upward with psi(x) = psi(x + 1) - 1/x and
    the asymptotic expansion is summed at the shifted point.
    """
    arr, scalar = _as_float_array(x)
    _require_positive("digamma", arr)
    z = np.array(arr, dtype=float, copy=True)
    acc = np.zeros_like(z)
    small = z < 6.0
    while np.any(small):
        acc[small] -= 1.0 / z[small]
        z[small] += 1.0
        small = z < 6.0
    inv2 = 1.0 / (z * z)
    series = np.zeros_like(z)
    for coef in reversed(_DIGAMMA_ASYMPTOTIC):
        series = (series + coef) * inv2
    out = np.log(z) - 0.5 / z - series + acc
    return _ret(out, scalar)


def _stirling_tail(z):
    """ln Gamma(z) - [(z - 1/2) ln z - z + ln(2 pi)/2] for z >= 10."""
    inv = 1.0 / z
    inv2 = inv * inv
    return inv * (1.0 / 12.0 + inv2 * (-1.0 / 360.0 + inv2 * (
        1.0 / 1260.0 + inv2 * (-1.0 / 1680.0 + inv2 * (1.0 / 1188.0)))))


def log_beta(a, b):
    """ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b).

    When the larger argument is >= 10 the difference ln Gamma(big) -
    ln Gamma(small + big) is formed from Stirling series differences, which
    avoids cancelling two huge log-gammas.
    """
    a_arr, sa = _as_float_array(a)
    b_arr, sb = _as_float_array(b)
    _require_positive("log_beta", a_arr)
    _require_positive("log_beta", b_arr)
    a_arr, b_arr = np.broadcast_arrays(a_arr, b_arr)
    small = np.minimum(a_arr, b_arr)
    big = np.maximum(a_arr, b_arr)
    out = np.asarray(log_gamma(small) + log_gamma(big) - log_gamma(small + big),
                     dtype=float)
    large = big >= 10.0
    if np.any(large):
        s, g = small[large], big[large]
        diff = (-(g - 0.5) * np.log1p(s / g) - s * np.log(s + g) + s
                + _stirling_tail(g) - _stirling_tail(s + g))
        out = np.array(out, copy=True)
        out[large] = np.asarray(log_gamma(s)) + diff
    return _ret(out, sa and sb)


def _betacf(a, b, x, y=None, max_iter=20000, eps=1e-16):
    """Continued fraction of the incomplete beta function (modified Lentz).

    ``y = 1 - x`` computed independently keeps the first denominator
    accurate when ``x`` is close to 1 and ``a`` is large.
    """
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    if y is None:
        y = 1.0 - x
    # 1 - (a + b) x / (a + 1), rewritten through y where x is near 1
    d = np.where(x > 0.5, (1.0 - b + qab * y) / qap, 1.0 - qab * x / qap)
    d = np.where(np.abs(d) < tiny, tiny, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, max_iter + 1):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        aa_, bb_, xx = a[idx], b[idx], x[idx]
        cc, dd, hh = c[idx], d[idx], h[idx]
        m2 = 2 * m
        num = m * (bb_ - m) * xx / ((qam[idx] + m2) * (aa_ + m2))
        dd = 1.0 + num * dd
        dd = np.where(np.abs(dd) < tiny, tiny, dd)
        cc = 1.0 + num / cc
        cc = np.where(np.abs(cc) < tiny, tiny, cc)
        dd = 1.0 / dd
        hh = hh * dd * cc
        num = -(aa_ + m) * (qab[idx] + m) * xx / ((aa_ + m2) * (qap[idx] + m2))
        dd = 1.0 + num * dd
        dd = np.where(np.abs(dd) < tiny, tiny, dd)
        cc = 1.0 + num / cc
        cc = np.where(np.abs(cc) < tiny, tiny, cc)
        dd = 1.0 / dd
        delta = dd * cc
        hh = hh * delta
        c[idx], d[idx], h[idx] = cc, dd, hh
        active[idx] = np.abs(delta - 1.0) > eps
    return h


def _betainc_inner(a, b, x, y):
    """I_x(a, b) for 0 < x < 1 given y = 1 - x computed independently."""
    swap = x > (a + 1.0) / (a + b + 2.0)
    aa = np.where(swap, b, a)
    bb = np.where(swap, a, b)
    xx = np.where(swap, y, x)
    yy = np.where(swap, x, y)
    with np.errstate(divide="ignore"):
        # ln of a value near 1 is taken from its precise complement
        log_x = np.where(xx > 0.5, np.log1p(-yy), np.log(xx))
        log_y = np.where(yy > 0.5, np.log1p(-xx), np.log(yy))
    log_front = aa * log_x + bb * log_y - log_beta(aa, bb)
    val = np.exp(log_front) * _betacf(aa, bb, xx, yy) / aa
    return np.where(swap, 1.0 - val, val)


def betainc(a, b, x):
    """Regularized incomplete beta function I_x(a, b), ``0 <= x <= 1``."""
    a_arr, sa = _as_float_array(a)
    b_arr, sb = _as_float_array(b)
    x_arr, sx = _as_float_array(x)
    _require_positive("betainc", a_arr)
    _require_positive("betainc", b_arr)
    if np.any((x_arr < 0) | (x_arr > 1) | np.isnan(x_arr)):
        raise DomainError("betainc requires 0 <= x <= 1")
    a_b, b_b, x_b = np.broadcast_arrays(a_arr, b_arr, x_arr)
    shape = x_b.shape
    a_f = a_b.ravel().astype(float)
    b_f = b_b.ravel().astype(float)
    x_f = x_b.ravel().astype(float)
    out = np.empty_like(x_f)
    out[x_f == 0] = 0.0
    out[x_f == 1] = 1.0
    inner = (x_f > 0) & (x_f < 1)
    if np.any(inner):
        xi = x_f[inner]
        out[inner] = _betainc_inner(a_f[inner], b_f[inner], xi, 1.0 - xi)
    return _ret(out.reshape(shape), sa and sb and sx)


def std_normal_cdf(x):
    """Standard normal distribution function Phi(x)."""
    arr, scalar = _as_float_array(x)
    out = 0.5 * np.asarray(_erfc_ufunc(-arr / math.sqrt(2.0)), dtype=float)
    return _ret(out, scalar)


# Acklam's rational approximation, refined by one Halley step.
_ACKLAM_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
             1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_ACKLAM_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
             6.680131188771972e01, -1.328068155288572e01)
_ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
             -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
             3.754408661907416e00)


def _polyval(coefs, x):
    acc = np.zeros_like(x)
    for c in coefs:
        acc = acc * x + c
    return acc


def _normal_lower_quantile(p):
    """Quantile for 0 < p <= 0.5 (the accurate half)."""
    x = np.empty_like(p)
    tail = p < 0.02425
    if np.any(tail):
        q = np.sqrt(-2.0 * np.log(p[tail]))
        x[tail] = _polyval(_ACKLAM_C, q) / (_polyval(_ACKLAM_D, q) * q + 1.0)
    mid = ~tail
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        x[mid] = _polyval(_ACKLAM_A, r) * q / (_polyval(_ACKLAM_B, r) * r + 1.0)
    for _ in range(2):
        e = std_normal_cdf(x) - p
        u = e * math.sqrt(2.0 * math.pi) * np.exp(0.5 * x * x)
        x = x - u / (1.0 + 0.5 * x * u)
    return x


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1)."""
    arr, scalar = _as_float_array(p)
    if np.any(~((arr > 0) & (arr < 1))):
        raise DomainError("std_normal_quantile requires 0 < p < 1")
    flat = arr.ravel()
    out = np.empty_like(flat)
    lower = flat <= 0.5
    out[lower] = _normal_lower_quantile(flat[lower])
    out[~lower] = -_normal_lower_quantile(1.0 - flat[~lower])
    out[flat == 0.5] = 0.0
    return _ret(out.reshape(arr.shape), scalar)


def student_t_logpdf(x, nu):
    """Log density of the univariate Student-t law with ``nu`` degrees of freedom."""
    arr, sx = _as_float_array(x)
    nu_arr, sn = _as_float_array(nu)
    _require_positive("student_t_logpdf", nu_arr)
    const = (log_gamma(0.5 * (nu_arr + 1.0)) - log_gamma(0.5 * nu_arr)
             - 0.5 * np.log(np.pi * nu_arr))
    out = const - 0.5 * (nu_arr + 1.0) * np.log1p(arr * arr / nu_arr)
    return _ret(np.asarray(out, dtype=float), sx and sn)


def student_t_pdf(x, nu):
    """Density of the univariate Student-t law."""
    return np.exp(student_t_logpdf(x, nu))


def _t_lower_tail(x, nu):
    """P(T <= -|x|) = I_z(nu/2, 1/2) / 2 with z = nu / (nu + x^2).

    Both z and 1 - z are formed directly so that small tails keep their
    relative precision.
    """
    ax = np.abs(x)
    x2 = ax * ax
    out = np.full_like(ax, 0.5)
    pos = ax > 0
    if np.any(pos):
        denom = nu + x2[pos]
        z = nu / denom
        zc = x2[pos] / denom
        ok = z > 0
        res = np.zeros_like(z)
        if np.any(ok):
            n = int(ok.sum())
            res[ok] = 0.5 * _betainc_inner(np.full(n, 0.5 * nu), np.full(n, 0.5),
                                           z[ok], zc[ok])
        out[pos] = res
    return out


def student_t_cdf(x, nu):
    """Distribution function of the univariate Student-t law (``nu > 0`` real)."""
    arr, scalar = _as_float_array(x)
    nu = float(nu)
    if not nu > 0:
        raise DomainError("student_t_cdf requires nu > 0")
    flat = arr.ravel()
    tail = _t_lower_tail(flat, nu)
    out = np.where(flat <= 0, tail, 1.0 - tail)
    return _ret(out.reshape(arr.shape), scalar)


def _invbetai(p, a, b):
    """Inverse of I_x(a, b) in x for scalar a, b and array p in (0, 1)."""
    x = np.empty_like(p)
    a1, b1 = a - 1.0, b - 1.0
    if a >= 1.0 and b >= 1.0:
        pp = np.where(p < 0.5, p, 1.0 - p)
        t = np.sqrt(-2.0 * np.log(pp))
        z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t
        z = np.where(p < 0.5, -z, z)
        al = (z * z - 3.0) / 6.0
        h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0))
        w = (z * np.sqrt(al + h) / h
             - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0))
             * (al + 5.0 / 6.0 - 2.0 / (3.0 * h)))
        x[:] = a / (a + b * np.exp(2.0 * w))
    else:
        lna = math.log(a / (a + b))
        lnb = math.log(b / (a + b))
        t = math.exp(a * lna) / a
        u = math.exp(b * lnb) / b
        w = t + u
        low = p < t / w
        x[low] = (a * w * p[low]) ** (1.0 / a)
        x[~low] = 1.0 - (b * w * (1.0 - p[~low])) ** (1.0 / b)
    afac = -log_beta(a, b)
    for _ in range(12):
        inside = (x > 0) & (x < 1)
        if not np.any(inside):
            break
        xi = x[inside]
        err = betainc(a, b, xi) - p[inside]
        t = np.exp(a1 * np.log(xi) + b1 * np.log1p(-xi) + afac)
        u = err / t
        step = u / (1.0 - 0.5 * np.minimum(1.0, u * (a1 / xi - b1 / (1.0 - xi))))
        new = xi - step
        new = np.where(new <= 0, 0.5 * xi, new)
        new = np.where(new >= 1, 0.5 * (xi + 1.0), new)
        x[inside] = new
    return x


def _t_lower_quantile(p, nu, polish=6):
    """Quantile for 0 < p < 0.5; returns negative values."""
    # tail prob p = 0.5 * I_z(nu/2, 1/2) with z = nu / (nu + t^2)
    t = np.empty_like(p)
    deep = p < 0.25
    if np.any(deep):
        z = _invbetai(2.0 * p[deep], 0.5 * nu, 0.5)
        z = np.clip(z, 1e-300, 1.0)
        t[deep] = -np.sqrt(nu * (1.0 - z) / z)
    if np.any(~deep):
        # 0.5 - p = 0.5 * I_w(1/2, nu/2) with w = t^2 / (nu + t^2)
        w = _invbetai(1.0 - 2.0 * p[~deep], 0.5, 0.5 * nu)
        w = np.clip(w, 0.0, 1.0 - 1e-16)
        t[~deep] = -np.sqrt(nu * w / (1.0 - w))
    for _ in range(polish):
        f = _t_lower_tail(t, nu)
        dens = student_t_pdf(t, nu)
        ok = dens > 0
        step = np.where(ok, (f - p) / np.where(ok, dens, 1.0), 0.0)
        new = t - step
        # keep iterates on the negative axis; halve toward 0 on overshoot
        t = np.where(new < 0, new, 0.5 * t)
    return t


def student_t_quantile(p, nu):
    """Inverse of :func:`student_t_cdf`; exactly 0 at ``p = 0.5``."""
    arr, scalar = _as_float_array(p)
    nu = float(nu)
    if not nu > 0:
        raise DomainError("student_t_quantile requires nu > 0")
    if np.any(~((arr > 0) & (arr < 1))):
        raise DomainError("student_t_quantile requires 0 < p < 1")
    flat = arr.ravel()
    out = np.zeros_like(flat)
    lower = flat < 0.5
    upper = flat > 0.5
    if np.any(lower):
        out[lower] = _t_lower_quantile(flat[lower], nu)
    if np.any(upper):
        out[upper] = -_t_lower_quantile(1.0 - flat[upper], nu)
    return _ret(out.reshape(arr.shape), scalar)
