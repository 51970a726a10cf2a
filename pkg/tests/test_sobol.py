"""Low-discrepancy points and the Gaussian quantile map.

The direction-number construction is cross-checked bitwise against scipy's
generator (which ships the same published table), offset by one index since
ours skips the all-zeros point.
"""

import mpmath
import numpy as np
import pytest
from scipy.stats import qmc

from bosampler.sobol import MAX_DIM, inverse_normal_cdf, normal_qmc_points, sobol_points

PHI_INV_975 = 1.9599639845400543   # bisection on a 40-digit normal CDF
PHI_INV_95 = 1.6448536269514726

# first eight points at d=2, after the zero-point skip
FIRST_EIGHT_D2 = np.array([
    [0.5, 0.5],
    [0.75, 0.25],
    [0.25, 0.75],
    [0.375, 0.375],
    [0.875, 0.875],
    [0.625, 0.125],
    [0.125, 0.625],
    [0.1875, 0.3125],
])


def scipy_reference(n, d):
    eng = qmc.Sobol(d, scramble=False, bits=32)
    # draw a power-of-two block to keep scipy's balance warning quiet
    block = 1 << int(np.ceil(np.log2(n + 1)))
    return eng.random(block)[1 : n + 1]


def test_first_point_is_midpoint():
    for d in (1, 2, 7, 32):
        pts = sobol_points(1, d)
        assert np.array_equal(pts, np.full((1, d), 0.5))


def test_frozen_low_indices():
    assert np.array_equal(sobol_points(8, 2), FIRST_EIGHT_D2)


@pytest.mark.parametrize("d", [1, 2, 3, 8, 16, 32])
def test_matches_scipy_stream_exactly(d):
    n = 257
    assert np.array_equal(sobol_points(n, d), scipy_reference(n, d))


def test_points_stay_in_unit_interval():
    pts = sobol_points(1000, 5)
    assert pts.shape == (1000, 5)
    assert np.all(pts >= 0.0) and np.all(pts < 1.0)


def test_zero_count_and_dim_limits():
    assert sobol_points(0, 3).shape == (0, 3)
    with pytest.raises(ValueError):
        sobol_points(4, MAX_DIM + 1)
    with pytest.raises(ValueError):
        sobol_points(4, 0)
    with pytest.raises(ValueError):
        sobol_points(-1, 2)


def test_box_coverage_beats_random():
    """256 points on a 16x16 grid: every cell holds exactly one point."""
    pts = sobol_points(256, 2)
    cells = (pts * 16).astype(int)
    counts = np.zeros((16, 16))
    np.add.at(counts, (cells[:, 0], cells[:, 1]), 1)
    sobol_dev = np.abs(counts - 1.0).max()

    rng = np.random.default_rng(0)
    mc_devs = []
    for _ in range(20):
        r = rng.random((256, 2))
        c = (r * 16).astype(int)
        counts = np.zeros((16, 16))
        np.add.at(counts, (c[:, 0], c[:, 1]), 1)
        mc_devs.append(np.abs(counts - 1.0).max())
    assert sobol_dev < np.mean(mc_devs)


def mpmath_quantile(u):
    mpmath.mp.dps = 30
    lo, hi = mpmath.mpf(-13), mpmath.mpf(13)
    for _ in range(120):
        mid = (lo + hi) / 2
        if mpmath.ncdf(mid) < u:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)


def test_quantile_frozen_values():
    assert inverse_normal_cdf(0.5) == 0.0
    assert inverse_normal_cdf(0.975) == pytest.approx(PHI_INV_975, abs=1e-12)
    assert inverse_normal_cdf(0.95) == pytest.approx(PHI_INV_95, abs=1e-12)


def test_quantile_against_high_precision_oracle():
    for u in np.linspace(1e-6, 1.0 - 1e-6, 41):
        assert abs(inverse_normal_cdf(float(u)) - mpmath_quantile(u)) < 1.15e-9


def test_quantile_symmetry_and_domain():
    for u in (0.01, 0.2, 0.37, 0.49):
        assert inverse_normal_cdf(u) + inverse_normal_cdf(1.0 - u) == pytest.approx(0.0, abs=1e-9)
    for bad in (0.0, 1.0, -0.3, 1.7, np.nan):
        with pytest.raises(ValueError):
            inverse_normal_cdf(bad)


def test_gaussianized_points_deterministic():
    a = normal_qmc_points(33, 4)
    b = normal_qmc_points(33, 4)
    assert np.array_equal(a, b)
    assert np.array_equal(a[0], np.zeros(4))
    assert np.all(np.isfinite(a))
