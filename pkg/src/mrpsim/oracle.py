"""Ground truth by quadrature: closed-form truncated-normal means
integrated against the Prev-GPA distribution (the G-formula).

The latent-mean clamp makes the integrand piecewise smooth in v with
kinks where v + shift crosses a GPA bound, so the integral is split at
those points and Gauss-Legendre is applied per smooth piece; node
doubling then converges spectrally instead of stalling at the kink.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from .coefficients import Coefficients, STRATUM_MC, STRATUM_SA
from .dgp import StrataLayout
from .kernels import tn_mean as _tn_mean_kernel
from .poststrat import PoststratMatrix, SubpopIndex, poststratify_point

__all__ = [
    "TruthTable",
    "cell_truth",
    "cell_truths_for",
    "g_formula",
    "school_truths",
    "truncnorm_mean",
]

_MIN_QUAD = 8


def truncnorm_mean(mu, sigma, lo, hi):
    """Mean of normal(mu, sigma^2) conditioned on (lo, hi)."""
    if np.any(np.asarray(sigma) <= 0):
        raise ValueError("sigma must be > 0")
    if not lo < hi:
        raise ValueError("need lo < hi")
    mu_arr = np.asarray(mu, dtype=np.float64)
    a = (lo - mu_arr) / sigma
    b = (hi - mu_arr) / sigma
    # interval mass from the nearer tail; underflow means the interval
    # carries no representable probability
    out = _tn_mean_kernel(np.atleast_1d(mu_arr).ravel(), float(sigma), float(lo), float(hi))
    if not np.all(np.isfinite(out)):
        raise ValueError(
            "truncation interval mass underflowed; review (lo, hi) against mu, sigma"
        )
    if mu_arr.ndim == 0:
        return float(out[0])
    return out.reshape(mu_arr.shape)


@lru_cache(maxsize=8)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _v_density(x, sa, coeffs):
    """Density of Prev-GPA (truncated normal per achievement level)."""
    mu = coeffs.mu_X[sa]
    sd = coeffs.sigma_X[sa]
    lo, hi = coeffs.gpa_lo, coeffs.gpa_hi
    z = (x - mu) / sd
    mass = ndtr((hi - mu) / sd) - ndtr((lo - mu) / sd)
    return np.exp(-0.5 * z * z) / (sd * np.sqrt(2 * np.pi) * mass)


def _shifted_outcome_integrals(c, sa, coeffs, quad):
    """For arrays c, sa: integral over v of
    tn_mean(clamp(v + c), outcome_sd) * p(v | sa), split at the clamp kinks.
    """
    if quad < _MIN_QUAD:
        raise ValueError(f"quad must be >= {_MIN_QUAD}, got {quad}")
    c = np.asarray(c, dtype=np.float64)
    sa = np.asarray(sa)
    lo, hi = coeffs.gpa_lo, coeffs.gpa_hi
    xg, wg = _leggauss(quad)

    # breakpoints of clamp(v + c): v = lo - c and v = hi - c, clipped in
    b1 = np.clip(lo - c, lo, hi)
    b2 = np.clip(hi - c, lo, hi)
    edges = np.stack([np.full_like(c, lo), b1, b2, np.full_like(c, hi)])

    total = np.zeros_like(c)
    for p in range(3):
        half = 0.5 * (edges[p + 1] - edges[p])
        mid = 0.5 * (edges[p + 1] + edges[p])
        # nodes: (n_cells, quad)
        x = mid[..., None] + half[..., None] * xg
        m = np.clip(x + c[..., None], lo, hi)
        f = truncnorm_mean(m, coeffs.outcome_sd, lo, hi)
        dens = _v_density(x, sa[..., None], coeffs)
        total += half * ((f * dens) @ wg)
    return total


def cell_truth(z, sa, mc, re, g, me, coeffs: Coefficients, u, t, quad=64):
    """E[Y(z)] for one poststratification cell given its school noises."""
    shift = (
        coeffs.tau_SA[sa]
        + coeffs.tau_MC[mc]
        + coeffs.tau_G[g]
        + coeffs.tau_RE[re]
        + coeffs.tau_ME[me]
        + u
    )
    c = np.array([z * shift + t], dtype=np.float64)
    return float(_shifted_outcome_integrals(c, np.array([sa]), coeffs, quad)[0])


def cell_truths_for(matrix: PoststratMatrix, layout: StrataLayout,
                    coeffs: Coefficients, quad=64, positions=None):
    """(tau_c, e1_c, e0_c) for the requested cells (default: all).

    The z=0 integral is shared by every cell of a school, so it is
    computed once per distinct school.
    """
    if positions is None:
        positions = np.arange(matrix.j)
    school = matrix.school[positions]
    sa = matrix.sa[positions].astype(np.int64)
    mc = matrix.mc[positions].astype(np.int64)
    shift = (
        coeffs.tau_SA[sa]
        + coeffs.tau_MC[mc]
        + coeffs.tau_G[matrix.g[positions].astype(np.int64)]
        + coeffs.tau_RE[matrix.re[positions].astype(np.int64)]
        + coeffs.tau_ME[matrix.me[positions].astype(np.int64)]
        + layout.u[school]
    )
    t = layout.t[school]

    e1 = np.empty(positions.size)
    chunk = 8192
    for i in range(0, positions.size, chunk):
        sl = slice(i, i + chunk)
        e1[sl] = _shifted_outcome_integrals(shift[sl] + t[sl], sa[sl], coeffs, quad)

    uniq_schools, inv = np.unique(school, return_inverse=True)
    sa_school = STRATUM_SA[layout.stratum[uniq_schools]].astype(np.int64)
    e0_school = _shifted_outcome_integrals(layout.t[uniq_schools], sa_school, coeffs, quad)
    e0 = e0_school[inv]
    return e1 - e0, e1, e0


def g_formula(idx: SubpopIndex, matrix: PoststratMatrix, coeffs: Coefficients,
              layout: StrataLayout, quad=64):
    """N_c-weighted cell-truth contrast over the subpopulation."""
    tau, _, _ = cell_truths_for(matrix, layout, coeffs, quad, positions=idx.positions)
    values = np.full(matrix.j, np.nan)
    values[idx.positions] = tau
    return poststratify_point(values, idx, matrix)


def school_truths(matrix: PoststratMatrix, layout: StrataLayout,
                  coeffs: Coefficients, quad=64):
    """True CATE per school: within-school N_c-weighted cell contrast."""
    tau, _, _ = cell_truths_for(matrix, layout, coeffs, quad)
    w = matrix.n_c.astype(np.float64)
    num = np.bincount(matrix.school, weights=tau * w, minlength=layout.n_schools)
    den = np.bincount(matrix.school, weights=w, minlength=layout.n_schools)
    with np.errstate(invalid="ignore"):
        return num / den


@dataclass(frozen=True)
class TruthTable:
    labels: tuple
    values: tuple
    ate: float
    quad: int


def truth_table(matrix, layout, coeffs, subpop_indices, quad=64) -> TruthTable:
    labels = []
    values = []
    ate = None
    for idx in subpop_indices:
        tau = g_formula(idx, matrix, coeffs, layout, quad)
        labels.append(idx.label)
        values.append(tau)
        if idx.positions.size == matrix.j:
            ate = tau
    if ate is None:
        full = SubpopIndex(np.arange(matrix.j), "ATE", 1.0)
        ate = g_formula(full, matrix, coeffs, layout, quad)
    return TruthTable(labels=tuple(labels), values=tuple(values), ate=ate, quad=quad)
