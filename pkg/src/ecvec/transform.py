"""Uniform vectors to Gaussian vectors and to points on the unit sphere."""

from __future__ import annotations

import numpy as np
from scipy.special import erfc

# Acklam's rational approximation to the normal quantile
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
TAIL = 0.02425


def filter_uniform(nums: np.ndarray, den: int) -> np.ndarray:
    """Keep rows of numerators over ``den`` with every coordinate strictly inside (0, 1).

    The test is on the integers, before any conversion to float.
    """
    nums = np.asarray(nums)
    if nums.ndim != 2:
        raise ValueError("expected a 2-d array of numerators")
    keep = np.all((nums > 0) & (nums < den), axis=1)
    return nums[keep]


def normal_cdf(x):
    return 0.5 * erfc(-np.asarray(x, dtype=float) / np.sqrt(2.0))


def _poly(coeffs, x):
    out = np.zeros_like(x)
    for c in coeffs:
        out = out * x + c
    return out


def inv_normal_cdf(u):
    """Standard normal quantile, accurate to about 1e-15 after one Halley step."""
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise ValueError("inv_normal_cdf needs 0 < u < 1")
    x = np.empty_like(u)
    low = u < TAIL
    high = u > 1 - TAIL
    mid = ~(low | high)
    if mid.any():
        q = u[mid] - 0.5
        r = q * q
        x[mid] = q * _poly(_A, r) / (_poly(_B, r) * r + 1)
    if low.any():
        q = np.sqrt(-2 * np.log(u[low]))
        x[low] = _poly(_C, q) / (_poly(_D, q) * q + 1)
    if high.any():
        q = np.sqrt(-2 * np.log1p(-u[high]))
        x[high] = -_poly(_C, q) / (_poly(_D, q) * q + 1)
    # Halley refinement; the residual is taken on the smaller tail to avoid cancellation
    upper = u > 0.5
    err = np.where(upper, (1 - u) - 0.5 * erfc(x / np.sqrt(2.0)), normal_cdf(x) - u)
    step = err * np.sqrt(2 * np.pi) * np.exp(x * x / 2)
    x = x - step / (1 + x * step / 2)
    x = np.where(u == 0.5, 0.0, x)
    return x if x.ndim else float(x)


def box_muller(u1, u2):
    """(sqrt(-2 ln u1) cos(2 pi u2), sqrt(-2 ln u1) sin(2 pi u2))."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if np.any(u1 <= 0) or np.any(u1 > 1):
        raise ValueError("box_muller needs 0 < u1 <= 1")
    radius = np.sqrt(-2 * np.log(u1))
    angle = 2 * np.pi * u2
    return radius * np.cos(angle), radius * np.sin(angle)


def gaussian_vectors(u: np.ndarray, method: str = "inverse") -> np.ndarray:
    """Map rows of a uniform (0,1)^d array to standard normal rows."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 2:
        raise ValueError("expected a 2-d array")
    if method == "inverse":
        return inv_normal_cdf(u) if u.size else u.copy()
    if method == "box-muller":
        if u.shape[1] % 2:
            raise ValueError("Box-Muller needs an even dimension d")
        out = np.empty_like(u)
        out[:, 0::2], out[:, 1::2] = box_muller(u[:, 0::2], u[:, 1::2])
        return out
    raise ValueError(f"unknown method {method!r}")


def gaussian_from_numerators(nums: np.ndarray, den: int, method: str = "inverse") -> np.ndarray:
    """Filter boundary rows exactly, then transform the survivors."""
    return gaussian_vectors(filter_uniform(nums, den) / den, method)


def to_sphere(v: np.ndarray) -> np.ndarray:
    """Normalise each row to unit length; zero rows are dropped."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        n = np.linalg.norm(v)
        if n == 0:
            raise ValueError("the zero vector has no direction")
        return v / n
    norms = np.linalg.norm(v, axis=1)
    keep = norms > 0
    return v[keep] / norms[keep, None]
