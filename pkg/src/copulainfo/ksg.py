"""Kraskov-Stoegbauer-Grassberger (KSG) mutual information with bootstrap CIs.

Algorithm 1 of the KSG family is used with the Chebyshev (max) norm::

    I = psi(k) + psi(n) - < psi(n_x + 1) + psi(n_y + 1) >

where, for every point, ``eps`` is the distance to its k-th nearest
neighbour and ``n_x`` (``n_y``) counts the other points whose x (y)
coordinate lies strictly closer than ``eps``.

Confidence intervals come from replicate estimates built on the pairs.
The default ``"split"`` scheme splits the sample at random into two
disjoint halves and reruns the estimator on each; the half difference has
the sampling spread of the full-sample estimate.  The ``"terms"`` scheme
resamples pairs with replacement and averages their per-point terms
``psi(n_x + 1) + psi(n_y + 1)``; it is much cheaper but ignores how a pair
shifts its neighbours' counts, so its intervals run somewhat narrow.
Rerunning the neighbour search on a with-replacement resample is avoided:
duplicated pairs sit at distance zero from each other and bias every
replicate upward.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
import math

import numpy as np
from scipy.spatial import cKDTree

from .rank import as_pairs, ranks
from .special import digamma

__all__ = [
    "DegeneracyError",
    "KsgConfig",
    "MiEstimate",
    "prepare",
    "neighbor_counts",
    "neighbor_counts_bruteforce",
    "ksg_terms",
    "ksg_from_counts",
    "ksg_mi",
    "bootstrap_mi",
    "replicate_seed",
]

TRANSFORMS = ("pseudo", "raw")


class DegeneracyError(ValueError):
    """Coincident points make the k-nearest-neighbour distances vanish."""


@dataclass(frozen=True)
class KsgConfig:
    """Estimator settings.

    ``transform="pseudo"`` runs the estimator on the rank transform of each
    coordinate, which makes it exactly invariant under strictly increasing
    marginal transforms.  ``"raw"`` uses the observations rescaled to unit
    sample standard deviation.
    """

    k: int = 3
    transform: str = "pseudo"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if self.transform not in TRANSFORMS:
            raise ValueError(f"transform must be one of {TRANSFORMS}, got {self.transform!r}")


@dataclass(frozen=True)
class MiEstimate:
    value: float
    n: int
    k: int
    ci_low: float
    ci_high: float
    level: float
    replicates: int
    seed: int
    transform: str = "pseudo"
    method: str = "split"
    units: str = "nats"

    def to_dict(self):
        return asdict(self)


def _order_free_scale(a):
    """Sample standard deviation computed independently of element order."""
    s = np.sort(a)
    mean = math.fsum(s) / s.size
    var = math.fsum((s - mean) ** 2) / (s.size - 1)
    return math.sqrt(var)


_DITHER_SEED = 20240607


def rank_dither(r):
    """Fixed sub-rank offset in [-1/8, 1/8) keyed by the (half-)integer rank.

    On the rank lattice many Chebyshev distances tie exactly, and the strict
    marginal counts then systematically drop the boundary points, which biases
    the estimate upward by about 0.015 nats at n ~ 5000.  Adding an offset that
    depends only on the rank value breaks these ties without changing the
    ordering, so the estimate stays a function of the ranks alone (and hence
    exactly marginal invariant, permutation invariant and symmetric).
    """
    key = np.rint(2.0 * np.asarray(r, dtype=float)).astype(np.int64)
    size = int(key.max()) + 1
    table = np.random.default_rng(_DITHER_SEED).random(size) - 0.5
    return 0.25 * table[key]


def prepare(x, y=None, transform="pseudo"):
    """Apply the configured input transform; returns an ``(n, 2)`` array.

    In pseudo mode the coordinates are the (average) ranks plus
    :func:`rank_dither`.  Ranks are used rather than ``rank / (n + 1)``; the
    common scale factor does not change any neighbour relation.
    """
    x, y = as_pairs(x, y)
    if transform == "pseudo":
        rx, ry = ranks(x), ranks(y)
        return np.column_stack([rx + rank_dither(rx), ry + rank_dither(ry)])
    if transform == "raw":
        sx, sy = _order_free_scale(x), _order_free_scale(y)
        if sx == 0 or sy == 0:
            raise DegeneracyError("a coordinate is constant")
        return np.column_stack([x / sx, y / sy])
    raise ValueError(f"unknown transform {transform!r}")


def _kth_distance(points, k):
    """Chebyshev distance from each point to its k-th nearest neighbour."""
    n = points.shape[0]
    if n < k + 1:
        raise ValueError(f"k={k} requires at least {k + 1} points")
    tree = cKDTree(points)
    dist, _ = tree.query(points, k=k + 1, p=np.inf)
    return dist.reshape(n, k + 1)[:, k]


def _strict_window_count(coord, eps):
    """Number of points with |coord_j - coord_i| < eps_i (self included)."""
    sc = np.sort(coord)
    n = sc.size
    lo = np.searchsorted(sc, coord - eps, side="right")
    hi = np.searchsorted(sc, coord + eps, side="left")
    # searchsorted compares shifted bounds; fix rounding so that membership is
    # decided by |sc[j] - coord| < eps exactly
    for _ in range(64):
        changed = False
        m = (lo > 0) & (np.abs(sc[np.maximum(lo - 1, 0)] - coord) < eps)
        if np.any(m):
            lo[m] -= 1
            changed = True
        m = (lo < n) & (lo < hi) & ~(np.abs(sc[np.minimum(lo, n - 1)] - coord) < eps)
        if np.any(m):
            lo[m] += 1
            changed = True
        m = (hi < n) & (np.abs(sc[np.minimum(hi, n - 1)] - coord) < eps)
        if np.any(m):
            hi[m] += 1
            changed = True
        m = (hi > lo) & ~(np.abs(sc[np.maximum(hi - 1, 0)] - coord) < eps)
        if np.any(m):
            hi[m] -= 1
            changed = True
        if not changed:
            break
    return hi - lo


def neighbor_counts(points, k):
    """k-th neighbour distances and strict marginal counts for a point set.

    Parameters
    ----------
    points : ndarray, shape (n, 2)
        Distinct points.
    k : int
        Neighbour order.

    Returns
    -------
    eps, n_x, n_y : ndarray
        Per point; the counts exclude the point itself.
    """
    points = np.asarray(points, dtype=float)
    eps = _kth_distance(points, k)
    if np.any(eps == 0):
        raise DegeneracyError(
            "duplicate points give zero neighbour distance; use the pseudo "
            "transform with jittered ties or remove exact duplicates")
    n_x = _strict_window_count(points[:, 0], eps) - 1
    n_y = _strict_window_count(points[:, 1], eps) - 1
    return eps, n_x, n_y


def neighbor_counts_bruteforce(points, k):
    """O(n^2) reference for :func:`neighbor_counts` with unit weights."""
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    dx = np.abs(points[:, 0][:, None] - points[:, 0][None, :])
    dy = np.abs(points[:, 1][:, None] - points[:, 1][None, :])
    d = np.maximum(dx, dy)
    np.fill_diagonal(d, np.inf)
    eps = np.sort(d, axis=1)[:, k - 1]
    np.fill_diagonal(dx, np.inf)
    np.fill_diagonal(dy, np.inf)
    n_x = np.sum(dx < eps[:, None], axis=1)
    n_y = np.sum(dy < eps[:, None], axis=1)
    return eps, n_x, n_y


def ksg_terms(n_x, n_y):
    """Per-point terms ``psi(n_x + 1) + psi(n_y + 1)``."""
    return digamma(np.asarray(n_x) + 1.0) + digamma(np.asarray(n_y) + 1.0)


def ksg_from_counts(n_x, n_y, k, n):
    """Combine marginal counts into the KSG estimate (nats)."""
    terms = ksg_terms(n_x, n_y)
    # fsum keeps the result independent of the order of the points
    return float(digamma(k) + digamma(n) - math.fsum(np.sort(terms)) / n)


def _check_distinct(points):
    uniq = np.unique(points, axis=0)
    if uniq.shape[0] != points.shape[0]:
        raise DegeneracyError(
            f"{points.shape[0] - uniq.shape[0]} duplicate point(s) after the "
            "input transform; the KSG distances degenerate. Jitter ties "
            "(pseudo_observations(..., tie_policy='jitter')) or drop duplicates")


def _config(cfg, k, transform):
    if cfg is None:
        return KsgConfig(k=3 if k is None else k, transform=transform or "pseudo")
    return cfg


def ksg_mi(x, y=None, cfg=None, *, k=None, transform=None):
    """KSG (algorithm 1) mutual information estimate in nats.

    Parameters
    ----------
    x, y : array_like
        The bivariate sample.
    cfg : KsgConfig, optional
        Estimator settings; ``k`` and ``transform`` keywords are shortcuts.

    Returns
    -------
    float
        The estimate.  It is not clipped and may be slightly negative for
        independent data.
    """
    cfg = _config(cfg, k, transform)
    pts = prepare(x, y, cfg.transform)
    n = pts.shape[0]
    if n < cfg.k + 1:
        raise ValueError(f"n={n} is too small for k={cfg.k}")
    _check_distinct(pts)
    _, n_x, n_y = neighbor_counts(pts, cfg.k)
    return ksg_from_counts(n_x, n_y, cfg.k, n)


def replicate_seed(seed, index):
    """Seed sequence of replicate ``index``, a pure function of both arguments."""
    return np.random.SeedSequence([int(seed), int(index)])


def _percentile_interval(values, level):
    vals = np.sort(np.asarray(values, dtype=float))
    alpha = 0.5 * (1.0 - level)
    lo, hi = np.quantile(vals, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def _terms_replicate(terms, const, rng):
    n = terms.size
    idx = rng.integers(0, n, size=n)
    return float(const - math.fsum(np.sort(terms[idx])) / n)


def _split_replicate(x, y, cfg, value, rng):
    n = x.size
    perm = rng.permutation(n)
    a, b = perm[: n // 2], perm[n // 2:]
    half = ksg_mi(x[a], y[a], cfg) - ksg_mi(x[b], y[b], cfg)
    # Var(half) = 2 Var(I_{n/2}) ~ 4 Var(I_n) for a 1/n variance
    return value + 0.5 * half


def bootstrap_replicates(x, y, cfg, replicates, seed, method="split", workers=1,
                         value=None, terms=None):
    """Replicate estimates; replicate ``r`` draws from ``replicate_seed(seed, r)``."""
    if method == "terms":
        const = digamma(cfg.k) + digamma(terms.size)

        def one(r):
            return _terms_replicate(terms, const, np.random.default_rng(replicate_seed(seed, r)))
    elif method == "split":
        if x.size // 2 < cfg.k + 1:
            raise ValueError(f"n={x.size} is too small to split for k={cfg.k}")

        def one(r):
            return _split_replicate(x, y, cfg, value,
                                    np.random.default_rng(replicate_seed(seed, r)))
    else:
        raise ValueError(f"unknown bootstrap method {method!r}")
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one, range(replicates)))
    else:
        values = [one(r) for r in range(replicates)]
    return np.asarray(values)


def bootstrap_mi(x, y=None, cfg=None, replicates=200, level=0.90, seed=1,
                 *, method="split", workers=1, return_replicates=False):
    """KSG estimate with a percentile confidence interval from pair resamples.

    Parameters
    ----------
    x, y : array_like
        The sample.
    cfg : KsgConfig, optional
    replicates : int
        Number of replicate estimates.
    level : float
        Two-sided confidence level of the percentile interval.
    seed : int
        Replicate ``r`` uses a generator seeded by ``(seed, r)``, so results
        do not depend on ``workers``.
    method : {"split", "terms"}
        Replicate scheme, see the module docstring.

    The point estimate always comes from the full sample.  With two or more
    replicates the interval is widened if needed to contain it; a single
    replicate is returned as a degenerate interval.

    Returns
    -------
    MiEstimate, or ``(MiEstimate, ndarray)`` when ``return_replicates``.
    """
    cfg = cfg or KsgConfig()
    if int(replicates) != replicates or replicates < 1:
        raise ValueError("replicates must be a positive integer")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    pts = prepare(x, y, cfg.transform)
    n = pts.shape[0]
    if n < cfg.k + 1:
        raise ValueError(f"n={n} is too small for k={cfg.k}")
    _check_distinct(pts)
    _, n_x, n_y = neighbor_counts(pts, cfg.k)
    value = ksg_from_counts(n_x, n_y, cfg.k, n)
    xs, ys = as_pairs(x, y)
    reps = bootstrap_replicates(xs, ys, cfg, replicates, seed, method=method,
                                workers=workers, value=value, terms=ksg_terms(n_x, n_y))
    lo, hi = _percentile_interval(reps, level)
    if replicates > 1:
        lo, hi = min(lo, value), max(hi, value)
    est = MiEstimate(value=value, n=n, k=cfg.k, ci_low=lo, ci_high=hi, level=level,
                     replicates=int(replicates), seed=seed, transform=cfg.transform,
                     method=method)
    if return_replicates:
        return est, reps
    return est
