"""Finite-population generation.

A population is built in three steps: `build_strata` fixes the school
layout (sizes and the two per-school noises, drawn once), then
`generate_population` fills in individuals school by school, then
`assign_treatment` applies complete randomization. Both potential
outcomes are stored for every individual, so any observed outcome is
consistent with its assignment by construction.

Latent outcome means are clamped to [gpa_lo, gpa_hi] before the
truncated draw, exactly as the generating process defines them, even
though the clamp only matters for covariate combinations pushed past
the boundary.
"""

from dataclasses import dataclass, replace

import numpy as np

from .coefficients import (
    Coefficients,
    N_STRATA,
    STRATUM_MC,
    STRATUM_SA,
    STRATUM_SCHOOLS,
)
from .tnorm import sample_truncnorm, sample_truncnorm_vec

__all__ = [
    "FinitePopulation",
    "StrataLayout",
    "assign_treatment",
    "build_strata",
    "generate_population",
    "sample_truncnorm",
    "treatment_vector",
]


@dataclass(frozen=True)
class StrataLayout:
    """Per-school records; school ids are positions 0..n_schools-1."""

    stratum: np.ndarray  # int32, stratum of each school
    size: np.ndarray  # int64, individual count per school
    u: np.ndarray  # float64, treatment-arm noise, one per school
    t: np.ndarray  # float64, outcome-level noise, one per school
    scale: float

    @property
    def n_schools(self):
        return self.stratum.shape[0]

    @property
    def schools_per_stratum(self):
        return np.bincount(self.stratum, minlength=N_STRATA)

    def school_sa(self, school):
        return STRATUM_SA[self.stratum[school]]

    def school_mc(self, school):
        return STRATUM_MC[self.stratum[school]]


@dataclass(frozen=True)
class FinitePopulation:
    """Columnar store: one entry per individual across all arrays."""

    layout: StrataLayout
    school: np.ndarray  # int32
    stratum: np.ndarray  # int8
    g: np.ndarray  # int8
    re: np.ndarray  # int8
    me: np.ndarray  # int8
    v: np.ndarray  # float64
    y0: np.ndarray  # float64
    y1: np.ndarray  # float64
    z: np.ndarray  # int8, -1 until assigned

    @property
    def n_p(self):
        return self.school.shape[0]

    @property
    def sa(self):
        return STRATUM_SA[self.stratum]

    @property
    def mc(self):
        return STRATUM_MC[self.stratum]


def build_strata(coeffs: Coefficients, scale, rng) -> StrataLayout:
    """Fix the school layout; sizes and noises are drawn exactly once."""
    if not 0 < scale <= 1:
        raise ValueError(f"scale must be in (0, 1], got {scale}")
    counts = np.maximum(1, np.rint(STRATUM_SCHOOLS * scale).astype(np.int64))
    stratum = np.repeat(np.arange(N_STRATA, dtype=np.int32), counts)
    n = int(counts.sum())
    size = rng.poisson(coeffs.school_size_mean, size=n).astype(np.int64)
    u = rng.normal(0.0, coeffs.school_noise_sd, size=n)
    t = rng.normal(0.0, coeffs.school_noise_sd, size=n)
    return StrataLayout(stratum=stratum, size=size, u=u, t=t, scale=float(scale))


def generate_population(layout: StrataLayout, coeffs: Coefficients, rng) -> FinitePopulation:
    """Draw every individual; each school gets its own child stream so
    schools are independent and the loop could run in any order."""
    n_schools = layout.n_schools
    school_seeds = rng.integers(0, 2**63, size=n_schools)
    n_p = int(layout.size.sum())

    school = np.repeat(np.arange(n_schools, dtype=np.int32), layout.size)
    stratum = layout.stratum[school].astype(np.int8)
    g = np.empty(n_p, dtype=np.int8)
    re = np.empty(n_p, dtype=np.int8)
    me = np.empty(n_p, dtype=np.int8)
    v = np.empty(n_p, dtype=np.float64)
    y0 = np.empty(n_p, dtype=np.float64)
    y1 = np.empty(n_p, dtype=np.float64)

    lo, hi = coeffs.gpa_lo, coeffs.gpa_hi
    lo_in = np.nextafter(lo, hi)
    hi_in = np.nextafter(hi, lo)
    re_cum = np.cumsum(coeffs.p_RE, axis=1)
    p_me = np.array([coeffs.p_me_for_stratum(s) for s in range(N_STRATA)])
    offsets = np.concatenate([[0], np.cumsum(layout.size)])

    for k in range(n_schools):
        n_k = int(layout.size[k])
        if n_k == 0:
            continue
        s = int(layout.stratum[k])
        sa = int(STRATUM_SA[s])
        mc = int(STRATUM_MC[s])
        sl = slice(offsets[k], offsets[k + 1])
        crng = np.random.default_rng(school_seeds[k])

        g_k = (crng.uniform(size=n_k) < coeffs.p_G).astype(np.int8)
        re_k = np.searchsorted(re_cum[s], crng.uniform(size=n_k), side="right")
        re_k = np.minimum(re_k, 4).astype(np.int8)
        me_k = (crng.uniform(size=n_k) < p_me[s]).astype(np.int8)
        v_k = sample_truncnorm_vec(
            np.full(n_k, coeffs.mu_X[sa]), coeffs.sigma_X[sa], lo, hi, crng
        )
        v_k = np.clip(v_k, lo_in, hi_in)

        shift = (
            coeffs.tau_SA[sa]
            + coeffs.tau_MC[mc]
            + coeffs.tau_G[g_k]
            + coeffs.tau_RE[re_k]
            + coeffs.tau_ME[me_k]
            + layout.u[k]
        )
        m0 = np.clip(v_k + layout.t[k], lo, hi)
        m1 = np.clip(v_k + shift + layout.t[k], lo, hi)
        y0_k = sample_truncnorm_vec(m0, coeffs.outcome_sd, lo, hi, crng)
        y1_k = sample_truncnorm_vec(m1, coeffs.outcome_sd, lo, hi, crng)

        g[sl] = g_k
        re[sl] = re_k
        me[sl] = me_k
        v[sl] = v_k
        y0[sl] = np.clip(y0_k, lo_in, hi_in)
        y1[sl] = np.clip(y1_k, lo_in, hi_in)

    return FinitePopulation(
        layout=layout,
        school=school,
        stratum=stratum,
        g=g,
        re=re,
        me=me,
        v=v,
        y0=y0,
        y1=y1,
        z=np.full(n_p, -1, dtype=np.int8),
    )


def treatment_vector(n_p, rng):
    """Complete randomization: exactly floor(n_p/2) ones, position-uniform.

    Takes only the population size and the stream, so assignment cannot
    depend on covariates.
    """
    z = np.zeros(n_p, dtype=np.int8)
    z[rng.permutation(n_p)[: n_p // 2]] = 1
    return z


def assign_treatment(pop: FinitePopulation, rng) -> FinitePopulation:
    if pop.n_p == 0:
        raise ValueError("cannot assign treatment to an empty population")
    return replace(pop, z=treatment_vector(pop.n_p, rng))
