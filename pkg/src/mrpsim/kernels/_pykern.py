"""Pure numpy/scipy implementations of the hot kernels.

Reference backend; `mrpsim.kernels` prefers the compiled twin `_ckern`
when it imported successfully. Both expose the same five functions and
must agree to float precision (see tests/test_kernels.py).

All kernels take a common truncation interval (lo, hi) and a scalar
residual sd; `mu` varies per row. Z = Phi(b) - Phi(a) is evaluated from
the nearer tail so it stays accurate when both standardized bounds sit
on the same side of zero.
"""

import numpy as np
from scipy.special import ndtr, ndtri

_LOG_SQRT_2PI = 0.9189385332046727


def _interval_mass(a, b):
    # Phi(b) - Phi(a), computed from survival functions when the
    # interval sits in a tail so the subtraction keeps precision.
    out = np.where(
        a > 0,
        ndtr(-a) - ndtr(-b),
        np.where(b < 0, ndtr(b) - ndtr(a), ndtr(b) - ndtr(a)),
    )
    return out


def tn_loglik_rows(y, mu, sigma, lo, hi):
    """Per-row truncated-normal log density, mu varying by row."""
    z = (y - mu) / sigma
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    mass = _interval_mass(a, b)
    with np.errstate(divide="ignore"):
        out = -0.5 * z * z - np.log(sigma) - _LOG_SQRT_2PI - np.log(mass)
    out = np.where(mass > 0, out, -np.inf)
    out = np.where((y > lo) & (y < hi), out, -np.inf)
    return out


def tn_loglik_total(y, mu, sigma, lo, hi):
    return float(np.sum(tn_loglik_rows(y, mu, sigma, lo, hi)))


def group_sums(values, codes, n_levels):
    return np.bincount(codes, weights=values, minlength=n_levels)


def tn_loglik_grouped(y, mu, sigma, lo, hi, codes, n_levels):
    rows = tn_loglik_rows(y, mu, sigma, lo, hi)
    return np.bincount(codes, weights=rows, minlength=n_levels)


def tn_mean(mu, sigma, lo, hi):
    """Mean of the truncated normal; mu array-like, sigma scalar or array."""
    mu = np.asarray(mu, dtype=np.float64)
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    mass = _interval_mass(a, b)
    phi_a = np.exp(-0.5 * a * a) / np.sqrt(2.0 * np.pi)
    phi_b = np.exp(-0.5 * b * b) / np.sqrt(2.0 * np.pi)
    return mu + sigma * (phi_a - phi_b) / mass


def tn_ppf(u, mu, sigma, lo, hi):
    """Map uniforms u in (0,1) through the truncated-normal inverse CDF.

    Reflected into the lower tail when the interval sits above the mean,
    keeping ndtri away from arguments near 1.
    """
    mu = np.asarray(mu, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    flip = (a + b) > 0
    a_ = np.where(flip, -b, a)
    b_ = np.where(flip, -a, b)
    u_ = np.where(flip, 1.0 - u, u)
    pa = ndtr(a_)
    pb = ndtr(b_)
    x = ndtri(pa + u_ * (pb - pa))
    x = np.where(flip, -x, x)
    return mu + sigma * x
