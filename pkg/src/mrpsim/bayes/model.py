"""Model specifications and design-array construction for the two
hierarchical truncated-normal regressions.

Both models share five random-intercept factors (RE, School, MC, SA,
SA x MC) and binary fixed effects (ME, G). The outcome model adds the
Prev-GPA offset with coefficient fixed at 1, treatment interactions
gamma for every factor and binary covariate, and a per-factor
correlation between a level's intercept and its treatment interaction.
"""

from dataclasses import dataclass

import numpy as np

from ..design import ObservedSample
from ..tnorm import sample_truncnorm_vec

FACTOR_NAMES = ("re", "school", "mc", "sa", "samc")

__all__ = [
    "FACTOR_NAMES",
    "ModelData",
    "ModelSpec",
    "post_gpa_spec",
    "prev_gpa_spec",
    "prior_predictive",
]


@dataclass(frozen=True)
class ModelSpec:
    kind: str  # "prev_gpa" or "post_gpa"
    lo: float
    hi: float
    fixed_prior_sd: float
    intercept_prior_mean: float
    scale_prior_sd: float
    gamma_scale_prior_sd: float | None  # None: no treatment terms
    sigma_prior_df: float = 3.0
    sigma_prior_scale: float = 2.5

    @property
    def has_treatment(self):
        return self.gamma_scale_prior_sd is not None

    def __post_init__(self):
        if self.kind not in ("prev_gpa", "post_gpa"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        for name in ("fixed_prior_sd", "scale_prior_sd"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


def prev_gpa_spec(lo=0.0, hi=4.33) -> ModelSpec:
    return ModelSpec(
        kind="prev_gpa",
        lo=lo,
        hi=hi,
        fixed_prior_sd=0.25,
        intercept_prior_mean=2.7,
        scale_prior_sd=0.25,
        gamma_scale_prior_sd=None,
    )


def post_gpa_spec(lo=0.0, hi=4.33) -> ModelSpec:
    return ModelSpec(
        kind="post_gpa",
        lo=lo,
        hi=hi,
        fixed_prior_sd=0.125,
        intercept_prior_mean=0.0,
        scale_prior_sd=0.125,
        gamma_scale_prior_sd=0.125,
    )


@dataclass(frozen=True)
class ModelData:
    """Columnar design arrays; factor codes index each factor's realized
    levels, with the original level ids kept for out-of-sample mapping."""

    y: np.ndarray
    offset: np.ndarray
    z: np.ndarray  # float64; all zeros when the model has no treatment
    x_fixed: np.ndarray  # (n, k) fixed-effect columns
    fixed_names: tuple
    codes: dict  # factor -> int32 (n,)
    levels: dict  # factor -> original level values, sorted
    n: int

    @property
    def n_levels(self):
        return {f: len(self.levels[f]) for f in self.codes}


def _encode(values):
    levels, codes = np.unique(np.asarray(values), return_inverse=True)
    return levels, codes.astype(np.int32)


def model_data_from_sample(spec: ModelSpec, sample: ObservedSample) -> ModelData:
    if sample.n == 0:
        raise ValueError("empty sample")
    raw = {
        "re": sample.re,
        "school": sample.school,
        "mc": sample.mc,
        "sa": sample.sa,
        "samc": sample.stratum,
    }
    levels = {}
    codes = {}
    for f, vals in raw.items():
        levels[f], codes[f] = _encode(vals)

    me = sample.me.astype(np.float64)
    g = sample.g.astype(np.float64)
    if spec.kind == "prev_gpa":
        y = sample.v.astype(np.float64)
        offset = np.zeros(sample.n)
        z = np.zeros(sample.n)
        x = np.column_stack([np.ones(sample.n), me, g])
        names = ("beta_0", "beta_me", "beta_g")
    else:
        y = sample.y.astype(np.float64)
        offset = sample.v.astype(np.float64)
        z = sample.z.astype(np.float64)
        x = np.column_stack([np.ones(sample.n), me, g, z * me, z * g])
        names = ("beta_0", "beta_me", "beta_g", "gamma_me", "gamma_g")
    return ModelData(
        y=np.ascontiguousarray(y),
        offset=np.ascontiguousarray(offset),
        z=np.ascontiguousarray(z),
        x_fixed=x,
        fixed_names=names,
        codes=codes,
        levels=levels,
        n=sample.n,
    )


def _half_t(df, scale, size, rng):
    return np.abs(rng.standard_t(df, size=size)) * scale


def prior_predictive(spec: ModelSpec, data: ModelData, n_draws, rng):
    """Outcome vectors drawn from the prior: parameters from their
    priors, then one truncated-normal outcome per data row; returns an
    (n_draws, n) array."""
    out = np.empty((n_draws, data.n))
    k = len(data.fixed_names)
    for r in range(n_draws):
        beta = rng.normal(0.0, spec.fixed_prior_sd, size=k)
        beta[0] = rng.normal(spec.intercept_prior_mean, spec.fixed_prior_sd)
        eta = data.offset + data.x_fixed @ beta
        for f, code in data.codes.items():
            n_lev = len(data.levels[f])
            sig = abs(rng.normal(0.0, spec.scale_prior_sd))
            alpha = rng.normal(0.0, sig, size=n_lev)
            eta = eta + alpha[code]
            if spec.has_treatment:
                sig_g = abs(rng.normal(0.0, spec.gamma_scale_prior_sd))
                rho = rng.uniform(-1.0, 1.0)
                gamma = sig_g * (
                    rho * alpha / max(sig, 1e-12)
                    + np.sqrt(1 - rho * rho) * rng.normal(size=n_lev)
                )
                eta = eta + data.z * gamma[code]
        sigma = _half_t(spec.sigma_prior_df, spec.sigma_prior_scale, None, rng)
        sigma = max(float(sigma), 1e-3)
        mu = np.clip(eta, spec.lo - 8 * sigma, spec.hi + 8 * sigma)
        out[r] = sample_truncnorm_vec(mu, sigma, spec.lo, spec.hi, rng)
    return out
