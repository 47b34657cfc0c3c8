import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erf

from ecvec.transform import (box_muller, filter_uniform, gaussian_from_numerators, gaussian_vectors,
                             inv_normal_cdf, to_sphere)


def _cdf(x):
    return 0.5 * (1 + erf(x / math.sqrt(2)))


def _bisect_quantile(u, tol=1e-14):
    """Bisection on the normal CDF in 50-digit arithmetic."""
    with mpmath.workdps(50):
        target = mpmath.mpf(u)
        lo, hi = mpmath.mpf(-40), mpmath.mpf(40)
        while hi - lo > tol:
            mid = (lo + hi) / 2
            if mpmath.ncdf(mid) < target:
                lo = mid
            else:
                hi = mid
        return float((lo + hi) / 2)


def test_filter_uniform():
    nums = np.array([[5, 5], [2, 3], [0, 2], [4, 1], [1, 5]])
    assert filter_uniform(nums, 5).tolist() == [[2, 3], [4, 1]]
    assert filter_uniform(np.zeros((0, 2), dtype=int), 5).shape == (0, 2)


def test_inverse_cdf_spot_values():
    assert inv_normal_cdf(0.5) == 0.0
    assert inv_normal_cdf(0.975) == pytest.approx(_bisect_quantile(0.975), abs=1e-10)
    assert inv_normal_cdf(0.975) == pytest.approx(1.959964, abs=1e-5)


@pytest.mark.parametrize("u", [1e-12, 1e-6, 0.02, 0.02425, 0.3, 0.7, 0.98, 1 - 1e-9])
def test_inverse_cdf_against_bisection(u):
    assert inv_normal_cdf(u) == pytest.approx(_bisect_quantile(u), abs=1e-9)


def test_inverse_cdf_round_trip_grid():
    u = np.linspace(1e-12, 1 - 1e-12, 10**4)
    x = inv_normal_cdf(u)
    assert np.max(np.abs(_cdf(x) - u)) <= 1e-9


def test_inverse_cdf_rejects_boundary():
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            inv_normal_cdf(bad)


@settings(max_examples=200)
@given(st.floats(1e-12, 0.5, exclude_max=True))
def test_inverse_cdf_symmetry(u):
    # 1 - u is rounded, so compare through the CDF rather than exactly
    x, y = inv_normal_cdf(u), inv_normal_cdf(1 - u)
    assert _cdf(-y) == pytest.approx(_cdf(x), rel=1e-6, abs=1e-15)


def test_box_muller_spot_values():
    z1, z2 = box_muller(math.exp(-0.5), 0.25)
    assert abs(z1) <= 1e-12 and abs(z2 - 1) <= 1e-12
    z1, z2 = box_muller(math.exp(-0.5), 0.0)
    assert z1 == pytest.approx(1, abs=1e-12) and z2 == 0


@settings(max_examples=200)
@given(st.floats(1e-12, 1, exclude_min=True), st.floats(0, 1, exclude_max=True))
def test_box_muller_norm(u1, u2):
    z1, z2 = box_muller(u1, u2)
    assert z1 * z1 + z2 * z2 == pytest.approx(-2 * math.log(u1), rel=1e-12, abs=1e-12)


def test_box_muller_rejects_zero():
    with pytest.raises(ValueError):
        box_muller(0.0, 0.5)


def test_box_muller_pairing():
    u = np.array([[0.3, 0.1, 0.6, 0.9]])
    out = gaussian_vectors(u, "box-muller")
    a = box_muller(0.3, 0.1)
    b = box_muller(0.6, 0.9)
    assert np.allclose(out[0], [a[0], a[1], b[0], b[1]])
    with pytest.raises(ValueError):
        gaussian_vectors(np.array([[0.3, 0.1, 0.5]]), "box-muller")


def test_sentinel_removed_before_transform():
    nums = np.array([[25, 25], [3, 7], [12, 0]])
    out = gaussian_from_numerators(nums, 25)
    assert out.shape == (1, 2)
    assert np.allclose(out[0], inv_normal_cdf(np.array([3 / 25, 7 / 25])))


def test_to_sphere():
    assert np.allclose(to_sphere(np.array([3.0, 4.0])), [0.6, 0.8])
    e1 = np.zeros(5)
    e1[0] = 1
    assert np.array_equal(to_sphere(e1), e1)
    rows = to_sphere(np.array([[3.0, 4.0], [0.0, 0.0], [0.0, 2.0]]))
    assert rows.tolist() == [[0.6, 0.8], [0.0, 1.0]]


def test_sphere_norms():
    rng = np.random.default_rng(5)
    w = to_sphere(rng.normal(size=(10**4, 7)))
    assert np.max(np.abs(np.linalg.norm(w, axis=1) - 1)) <= 2**-40
