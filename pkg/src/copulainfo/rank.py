"""Rank-based, marginal-invariant dependence statistics.

Samples are passed as two equal-length 1-d arrays ``x`` and ``y`` (or an
``(n, 2)`` array where a single argument is accepted).
"""
import math

import numpy as np

from .special import DomainError

__all__ = [
    "DegenerateInputError",
    "as_pairs",
    "ranks",
    "pseudo_observations",
    "kendall_tau",
    "kendall_tau_bruteforce",
    "spearman_rho",
    "linear_correlation",
    "tau_to_rho",
    "rho_to_tau",
    "rank_to_rho_gaussian",
    "rho_to_rank_gaussian",
]


class DegenerateInputError(ValueError):
    """Sample for which the requested statistic is undefined."""


def as_pairs(x, y=None):
    """Validate a bivariate sample and return it as two float arrays."""
    if y is None:
        arr = np.asarray(x, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("expected an (n, 2) array of pairs")
        x, y = arr[:, 0], arr[:, 1]
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"x and y lengths differ: {x.size} != {y.size}")
    if x.size < 2:
        raise ValueError("at least two pairs are required")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("sample contains non-finite values")
    return x, y


def ranks(a):
    """1-based ranks with ties assigned their average rank."""
    a = np.asarray(a, dtype=float)
    order = np.argsort(a, kind="mergesort")
    sorted_a = a[order]
    # boundaries of runs of equal values
    new_run = np.empty(a.size, dtype=bool)
    new_run[0] = True
    np.not_equal(sorted_a[1:], sorted_a[:-1], out=new_run[1:])
    run_id = np.cumsum(new_run) - 1
    starts = np.flatnonzero(new_run)
    ends = np.append(starts[1:], a.size)
    avg = 0.5 * (starts + ends + 1)  # mean of 1-based positions start+1..end
    out = np.empty(a.size, dtype=float)
    out[order] = avg[run_id]
    return out


def pseudo_observations(x, y=None, tie_policy="average", seed=None):
    """Map a sample onto the open unit square by ``rank / (n + 1)``.

    Parameters
    ----------
    x, y : array_like
        The sample (``y`` may be omitted when ``x`` is ``(n, 2)``).
    tie_policy : {"average", "jitter"}
        ``"average"`` gives tied values their mean rank. ``"jitter"`` breaks
        ties by a seeded random ordering among equal values, which is the
        limit of adding infinitesimal noise before ranking.
    seed : int, optional
        Seed for the jitter policy.

    Returns
    -------
    u, v : ndarray
    """
    x, y = as_pairs(x, y)
    n = x.size
    if tie_policy == "average":
        rx, ry = ranks(x), ranks(y)
    elif tie_policy == "jitter":
        rng = np.random.default_rng(seed)
        rx = _jitter_ranks(x, rng)
        ry = _jitter_ranks(y, rng)
    else:
        raise ValueError(f"unknown tie policy {tie_policy!r}")
    return rx / (n + 1), ry / (n + 1)


def _jitter_ranks(a, rng):
    noise = rng.random(a.size)
    order = np.lexsort((noise, a))
    out = np.empty(a.size, dtype=float)
    out[order] = np.arange(1, a.size + 1, dtype=float)
    return out


def _dense_ranks(a):
    """0-based dense integer ranks (ties share a rank)."""
    _, inv = np.unique(a, return_inverse=True)
    return inv.astype(np.int64)


def _tie_pairs(dense):
    counts = np.bincount(dense)
    return int(np.sum(counts * (counts - 1) // 2))


def _count_inversions(seq):
    """Number of pairs i < j with seq[i] > seq[j] for a non-negative int array.

    Bottom-up merge sort where every level is processed with whole-array
    numpy operations: within each pair of adjacent sorted blocks the number
    of left-block elements exceeding each right-block element is found by
    ``searchsorted`` on block-offset keys.
    """
    a = np.asarray(seq, dtype=np.int64).copy()
    n = a.size
    if n < 2:
        return 0
    span = int(a.max()) + 1
    pos = np.arange(n)
    total = 0
    width = 1
    while width < n:
        pair = pos // (2 * width)
        is_right = (pos % (2 * width)) >= width
        keys = pair * span + a
        left_keys = keys[~is_right]  # sorted: pair ids increase, blocks sorted
        right_idx = np.flatnonzero(is_right)
        if right_idx.size:
            le = np.searchsorted(left_keys, keys[right_idx], side="right")
            # left elements of the same pair that precede this one
            left_start = np.searchsorted(left_keys, pair[right_idx] * span, side="left")
            left_len = np.minimum(width, n - pair[right_idx] * 2 * width)
            total += int(np.sum(left_len - (le - left_start)))
        a = np.sort(keys) - pair * span
        width *= 2
    return total


def _kendall_counts(x, y):
    """Return (concordant, discordant, n0, ties_x, ties_y) as Python ints."""
    rx = _dense_ranks(x)
    ry = _dense_ranks(y)
    n = rx.size
    order = np.lexsort((ry, rx))
    discordant = _count_inversions(ry[order])
    n0 = n * (n - 1) // 2
    tx = _tie_pairs(rx)
    ty = _tie_pairs(ry)
    joint = _dense_ranks(rx * (int(ry.max()) + 1) + ry)
    txy = _tie_pairs(joint)
    concordant = n0 - tx - ty + txy - discordant
    return concordant, discordant, n0, tx, ty


def _tau_b(concordant, discordant, n0, tx, ty):
    denom = (n0 - tx) * (n0 - ty)
    if denom == 0:
        raise DegenerateInputError("Kendall's tau undefined: a coordinate is constant")
    return (concordant - discordant) / math.sqrt(denom)


def kendall_tau(x, y=None):
    """Kendall's tau-b in O(n log n).

    Ties are corrected as in tau-b: ``(C - D) / sqrt((P - Tx)(P - Ty))`` with
    ``P = n(n-1)/2`` and ``Tx``, ``Ty`` the numbers of pairs tied in each
    coordinate.
    """
    x, y = as_pairs(x, y)
    return _tau_b(*_kendall_counts(x, y))


def kendall_tau_bruteforce(x, y=None):
    """O(n^2) pair-counting reference for :func:`kendall_tau`."""
    x, y = as_pairs(x, y)
    n = x.size
    iu = np.triu_indices(n, 1)
    sx = np.sign(x[:, None] - x[None, :])[iu].astype(np.int64)
    sy = np.sign(y[:, None] - y[None, :])[iu].astype(np.int64)
    prod = sx * sy
    concordant = int(np.sum(prod > 0))
    discordant = int(np.sum(prod < 0))
    tx = int(np.sum(sx == 0))
    ty = int(np.sum(sy == 0))
    return _tau_b(concordant, discordant, n * (n - 1) // 2, tx, ty)


def _pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    saa = float(np.dot(a, a))
    sbb = float(np.dot(b, b))
    if saa == 0.0 or sbb == 0.0:
        raise DegenerateInputError("correlation undefined: zero sample variance")
    r = float(np.dot(a, b)) / math.sqrt(saa * sbb)
    return min(1.0, max(-1.0, r))


def spearman_rho(x, y=None):
    """Spearman's rank correlation (Pearson correlation of average ranks)."""
    x, y = as_pairs(x, y)
    return _pearson(ranks(x), ranks(y))


def linear_correlation(x, y=None):
    """Pearson product-moment correlation."""
    x, y = as_pairs(x, y)
    return _pearson(x, y)


def _open_unit(name, value):
    value = float(value)
    if not -1.0 < value < 1.0:
        raise DomainError(f"{name} must lie in the open interval (-1, 1), got {value}")
    return value


def tau_to_rho(tau):
    """Correlation parameter of an elliptical copula from Kendall's tau."""
    return math.sin(0.5 * math.pi * _open_unit("tau", tau))


def rho_to_tau(rho):
    """Kendall's tau of a Gaussian or Student-t copula with parameter ``rho``."""
    return 2.0 / math.pi * math.asin(_open_unit("rho", rho))


def rank_to_rho_gaussian(rho_rank):
    """Gaussian-copula correlation parameter from Spearman's rho."""
    return 2.0 * math.sin(math.pi * _open_unit("rho_rank", rho_rank) / 6.0)


def rho_to_rank_gaussian(rho):
    """Spearman's rho of a Gaussian copula with parameter ``rho``."""
    return 6.0 / math.pi * math.asin(0.5 * _open_unit("rho", rho))
