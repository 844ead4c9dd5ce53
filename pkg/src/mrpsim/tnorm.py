"""Truncated-normal sampling.

Inverse-CDF transform on the common path. When the truncation interval
sits more than 6 sds into one tail the interval CDF mass underflows the
inverse transform's resolution, so we fall back to the exponential
rejection sampler of Robert (1995): proposals lam*exp(-lam(x-a)) on
[a, inf) with lam = (a + sqrt(a^2+4))/2, accepted with probability
exp(-(x-lam)^2/2), shifted/reflected onto the requested interval.
"""

import math

import numpy as np

from .kernels import tn_ppf

_TAIL_CUTOFF = 6.0


def _validate(mu, sigma, lo, hi):
    if not (math.isfinite(mu) and math.isfinite(sigma) and math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("non-finite truncated-normal parameters")
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got ({lo}, {hi})")


def _robert_tail(a, b, rng):
    # One draw from standard normal truncated to [a, b], a >= TAIL_CUTOFF.
    lam = 0.5 * (a + math.sqrt(a * a + 4.0))
    while True:
        x = a + rng.exponential(1.0 / lam)
        if x > b:
            continue
        u = rng.uniform()
        if u <= math.exp(-0.5 * (x - lam) * (x - lam)):
            return x


def sample_truncnorm(mu, sigma, lo, hi, rng):
    """One draw from normal(mu, sigma^2) conditioned on (lo, hi)."""
    _validate(mu, sigma, lo, hi)
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    if a >= _TAIL_CUTOFF:
        return mu + sigma * _robert_tail(a, b, rng)
    if b <= -_TAIL_CUTOFF:
        return mu - sigma * _robert_tail(-b, -a, rng)
    u = np.atleast_1d(rng.uniform())
    mu_arr = np.full(1, float(mu))
    return float(tn_ppf(u, mu_arr, float(sigma), float(lo), float(hi))[0])


def sample_truncnorm_vec(mu, sigma, lo, hi, rng):
    """Vector of draws, one per entry of mu; shared scalar sigma.

    Callers stay inside |standardized bound| <= 6 here; the scalar
    entry point owns the tail fallback.
    """
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    u = rng.uniform(size=mu.shape[0])
    return tn_ppf(u, mu, float(sigma), float(lo), float(hi))
