import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy.special import digamma as sp_digamma

from copulainfo.copula import (
    Gaussian,
    GaussianCopula,
    LogNormal,
    StudentTCopula,
    apply_marginals,
    mi_gaussian,
    sample_copula,
)
from copulainfo.ksg import (
    DegeneracyError,
    KsgConfig,
    MiEstimate,
    bootstrap_mi,
    ksg_from_counts,
    ksg_mi,
    neighbor_counts,
    neighbor_counts_bruteforce,
    prepare,
    rank_dither,
    replicate_seed,
)

# Five lattice points worked by hand with k = 1 (Chebyshev distances):
#   every point's nearest neighbour lies at distance 2;
#   strict x-window counts 1,2,2,2,1 and y-window counts 1,2,2,1,2.
HAND_X = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
HAND_Y = np.array([0.0, 3.0, 1.0, 4.0, 2.0])
HAND_NX = np.array([1, 2, 2, 2, 1])
HAND_NY = np.array([1, 2, 2, 1, 2])
HAND_VALUE = (sp_digamma(1) + sp_digamma(5)
              - np.mean(sp_digamma(HAND_NX + 1) + sp_digamma(HAND_NY + 1)))


def test_hand_computed_counts():
    eps, nx, ny = neighbor_counts(np.column_stack([HAND_X, HAND_Y]), 1)
    assert_array_equal(eps, 2.0)
    assert_array_equal(nx, HAND_NX)
    assert_array_equal(ny, HAND_NY)


def test_hand_computed_estimate():
    # x and y have equal spread, so the raw transform keeps the geometry
    assert_allclose(ksg_mi(HAND_X, HAND_Y, k=1, transform="raw"), HAND_VALUE, rtol=1e-14)
    assert_allclose(ksg_from_counts(HAND_NX, HAND_NY, 1, 5), HAND_VALUE, rtol=1e-14)


@pytest.mark.parametrize("seed", range(12))
def test_counts_match_bruteforce(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(10, 1000))
    k = int(rng.integers(1, 6))
    x = rng.standard_t(2, n)
    y = x * rng.uniform(-1, 1) + rng.normal(size=n)
    for transform in ("raw", "pseudo"):
        pts = prepare(x, y, transform)
        fast = neighbor_counts(pts, k)
        slow = neighbor_counts_bruteforce(pts, k)
        for a, b in zip(fast, slow):
            assert_array_equal(a, b)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=8, max_size=120, unique=True),
       st.integers(1, 4))
def test_counts_match_bruteforce_on_integer_grids(pairs, k):
    pts = np.array(pairs, dtype=float)
    fast = neighbor_counts(pts, k)
    slow = neighbor_counts_bruteforce(pts, k)
    for a, b in zip(fast, slow):
        assert_array_equal(a, b)


def test_independent_uniform_null():
    rng = np.random.default_rng(10)
    assert abs(ksg_mi(rng.random(10_000), rng.random(10_000))) <= 0.02


def test_gaussian_closed_form_rho09():
    u, v = sample_copula(GaussianCopula(0.9), 4700, seed=12)
    x, y = apply_marginals(u, v, Gaussian(), Gaussian())
    assert abs(ksg_mi(x, y) - 0.8304) <= 0.03


def test_never_clipped():
    vals = [ksg_mi(*np.random.default_rng(s).random((2, 300))) for s in range(30)]
    assert min(vals) < 0


def test_permutation_invariance_exact():
    u, v = sample_copula(StudentTCopula(0.4, 3.0), 800, seed=2)
    perm = np.random.default_rng(0).permutation(800)
    for transform in ("pseudo", "raw"):
        assert ksg_mi(u, v, transform=transform) == ksg_mi(u[perm], v[perm], transform=transform)


def test_symmetry_exact():
    u, v = sample_copula(StudentTCopula(-0.6, 2.0), 900, seed=3)
    for transform in ("pseudo", "raw"):
        assert ksg_mi(u, v, transform=transform) == ksg_mi(v, u, transform=transform)


def test_pseudo_mode_exact_marginal_invariance():
    u, v = sample_copula(StudentTCopula(0.5, 3.0), 1500, seed=4)
    base = ksg_mi(u, v)
    assert ksg_mi(np.log(u / (1 - u)), v ** 5) == base
    assert ksg_mi(*apply_marginals(u, v, LogNormal(0, 2), LogNormal(1, 0.3))) == base


def test_raw_mode_approximate_marginal_invariance():
    u, v = sample_copula(GaussianCopula(0.6), 5000, seed=5)
    est = bootstrap_mi(u, v, KsgConfig(transform="raw"), replicates=100, seed=1)
    shifted = ksg_mi(np.exp(3 * u), np.tan(v - 0.5), transform="raw")
    assert abs(shifted - est.value) < 0.5 * (est.ci_high - est.ci_low)


def test_jensen_mean_over_independent_runs():
    vals = [ksg_mi(*sample_copula(GaussianCopula(0.0), 2000, seed=[77, r])) for r in range(50)]
    assert abs(np.mean(vals)) <= 0.01


def test_rank_dither_keeps_order_and_is_deterministic():
    r = np.arange(1, 2001) / 1.0
    d = rank_dither(r)
    assert np.all(np.abs(d) <= 0.125)
    assert np.all(np.diff(r + d) > 0)
    assert_array_equal(d, rank_dither(r))
    # keyed by value: the same rank gets the same offset in any sample
    assert_array_equal(rank_dither(np.array([7.0, 3.0])), d[[6, 2]])
    assert rank_dither(np.array([3.5]))[0] == rank_dither(np.array([3.5, 900.0]))[0]


def test_raw_duplicates_raise():
    x = np.array([1.0, 1.0, 2.0, 3.0, 4.0, 5.0])
    y = np.array([1.0, 1.0, 5.0, 2.0, 0.0, 3.0])
    with pytest.raises(DegeneracyError, match="jitter"):
        ksg_mi(x, y, transform="raw")


def test_too_few_points():
    with pytest.raises(ValueError):
        ksg_mi([1.0, 2.0, 3.0], [3.0, 1.0, 2.0], k=3)


@pytest.mark.parametrize("k, transform", [(0, "pseudo"), (2.5, "pseudo"), (3, "ranks")])
def test_config_validation(k, transform):
    with pytest.raises(ValueError):
        KsgConfig(k=k, transform=transform)


# --- bootstrap -------------------------------------------------------------

@pytest.fixture(scope="module")
def sample():
    return sample_copula(StudentTCopula(0.5, 4.0), 1200, seed=21)


@pytest.mark.parametrize("method", ["split", "terms"])
def test_single_replicate_interval(sample, method):
    est, reps = bootstrap_mi(*sample, replicates=1, seed=4, method=method, return_replicates=True)
    assert reps.shape == (1,)
    assert est.ci_low == est.ci_high == reps[0]


@pytest.mark.parametrize("method", ["split", "terms"])
def test_interval_contains_value(sample, method):
    est = bootstrap_mi(*sample, replicates=50, seed=4, method=method)
    assert est.ci_low <= est.value <= est.ci_high
    assert est.value == ksg_mi(*sample)
    assert isinstance(est, MiEstimate)


@pytest.mark.parametrize("method", ["split", "terms"])
def test_bootstrap_reproducible_and_worker_independent(sample, method):
    a = bootstrap_mi(*sample, replicates=30, seed=9, method=method, return_replicates=True)
    b = bootstrap_mi(*sample, replicates=30, seed=9, method=method, workers=3, return_replicates=True)
    assert a[0] == b[0]
    assert_array_equal(a[1], b[1])
    c = bootstrap_mi(*sample, replicates=30, seed=10, method=method)
    assert c.ci_low != a[0].ci_low


def test_replicates_prefix_stable(sample):
    # replicate r depends only on (seed, r)
    _, short = bootstrap_mi(*sample, replicates=10, seed=2, return_replicates=True)
    _, long = bootstrap_mi(*sample, replicates=25, seed=2, return_replicates=True)
    assert_array_equal(short, long[:10])


def test_replicate_seed_is_pure():
    a = np.random.default_rng(replicate_seed(5, 3)).random(4)
    b = np.random.default_rng(replicate_seed(5, 3)).random(4)
    assert_array_equal(a, b)


@pytest.mark.parametrize("kwargs", [dict(replicates=0), dict(level=1.0), dict(level=0.0),
                                    dict(method="jackknife")])
def test_bootstrap_argument_validation(sample, kwargs):
    with pytest.raises(ValueError):
        bootstrap_mi(*sample, **kwargs)


def test_estimate_to_dict_units(sample):
    d = bootstrap_mi(*sample, replicates=5).to_dict()
    assert d["units"] == "nats"
    assert set(d) >= {"value", "n", "k", "ci_low", "ci_high", "level", "replicates", "seed"}


@pytest.mark.parametrize("rho", [0.0, 0.5])
def test_interval_coverage(rho):
    # percentile interval at level 0.9 over 60 independent datasets
    truth = mi_gaussian(rho)
    hits = 0
    for r in range(60):
        u, v = sample_copula(GaussianCopula(rho), 2000, seed=[606, r])
        est = bootstrap_mi(u, v, replicates=100, seed=r)
        hits += est.ci_low <= truth <= est.ci_high
    # nominal 0.9; three binomial standard errors at 60 runs is 0.116
    assert abs(hits / 60 - 0.9) <= 0.116
