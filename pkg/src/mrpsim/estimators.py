"""Treatment-effect estimators over poststratification cells.

The multiply-imputing estimator draws, per posterior draw j and cell c,
one covariate value v*, then one outcome per arm with v* shared across
arms, and poststratifies each draw; the single-imputation variant fixes
each cell's covariate at its predictive mean and only draws outcomes.
Point = draw mean, se = draw sd, interval = equal-tailed percentiles.

`estimate_all` runs the full panel (OLS, SVY, MRP-I, MRP-MI) for every
requested subpopulation; the regression estimators refit on the subset
rows and record a skip marker when the subset is empty or single-arm,
since they cannot reach subpopulations the survey missed.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .bayes.predictive import CellPredictive
from .freq import fit_ols, fit_svy, rake_weights, raking_spec_from_matrix
from .poststrat import PoststratMatrix, SubpopIndex, subpop_index

__all__ = [
    "EstimateResult",
    "estimate_all",
    "impute_vhat",
    "mrp_i",
    "mrp_mi",
]

_SE_FLOOR = 1e-12
_CHUNK = 2048


@dataclass(frozen=True)
class EstimateResult:
    estimator: str
    subpop: str
    point: float
    se: float
    lower95: float
    upper95: float
    n_subset: int = 0
    replication: int = 0
    seed: int = 0
    skipped: bool = False
    draws: np.ndarray | None = field(default=None, repr=False)


def _floor_se(se, label):
    if se < _SE_FLOOR:
        warnings.warn(f"degenerate draw spread for {label}; flooring se")
        return _SE_FLOOR
    return se


def _result_from_draws(tau, estimator, idx, keep_draws, **kw):
    point = float(tau.mean())
    se = _floor_se(float(tau.std(ddof=1)) if tau.size > 1 else 0.0, idx.label)
    lo, hi = np.percentile(tau, [2.5, 97.5])
    return EstimateResult(
        estimator=estimator, subpop=idx.label, point=point, se=se,
        lower95=float(lo), upper95=float(hi),
        draws=tau if keep_draws else None, **kw,
    )


def _school_chunks(school, chunk):
    """Slices of <= ~chunk cells that never split a school, so an
    unobserved school keeps a single effect draw per posterior draw."""
    n = school.shape[0]
    start = 0
    while start < n:
        end = min(start + chunk, n)
        if end < n:
            cut = int(np.searchsorted(school, school[end], side="left"))
            end = cut if cut > start else int(
                np.searchsorted(school, school[end], side="right"))
        yield slice(start, end)
        start = end


def _mrp_draws(prev, post, matrix, idx, rng, vhat=None, chunk=_CHUNK):
    """Length-S vector of poststratified contrast draws over idx."""
    positions = idx.positions
    w_all = matrix.n_c[positions].astype(np.float64)
    w_all = w_all / w_all.sum()
    tau = np.zeros(post.s)
    for sl in _school_chunks(matrix.school[positions], chunk):
        pred = CellPredictive(prev, post, matrix, positions[sl], rng)
        if vhat is None:
            v = pred.sample_vstar()
        else:
            v = vhat[positions[sl]]
        y1 = pred.sample_y(1, v)
        y0 = pred.sample_y(0, v)
        tau += (y1 - y0) @ w_all[sl]
    return tau


def mrp_mi(prev, post, matrix: PoststratMatrix, idx: SubpopIndex, rng,
           keep_draws=False, **kw) -> EstimateResult:
    """Multiply-imputing poststratified contrast (covariate integrated
    out via one v* draw per cell and posterior draw)."""
    if idx.positions.size == 0:
        raise ValueError("empty subpopulation")
    if prev.s != post.s:
        raise ValueError(f"draw counts differ: {prev.s} vs {post.s}")
    tau = _mrp_draws(prev, post, matrix, idx, rng)
    return _result_from_draws(tau, "MRP-MI", idx, keep_draws, **kw)


def impute_vhat(prev, matrix: PoststratMatrix, rng, chunk=_CHUNK):
    """Per-cell predictive mean of the covariate (averaged over draws
    analytically; unseen-school effects are the only sampling)."""
    out = np.empty(matrix.j)
    all_pos = np.arange(matrix.j)
    for sl in _school_chunks(matrix.school, chunk):
        pred = CellPredictive(prev, None, matrix, all_pos[sl], rng)
        out[sl] = pred.vhat()
    return out


def mrp_i(vhat, post, matrix: PoststratMatrix, idx: SubpopIndex, rng,
          keep_draws=False, **kw) -> EstimateResult:
    """Single-imputation variant: cells keep their point-imputed
    covariate for every draw."""
    if idx.positions.size == 0:
        raise ValueError("empty subpopulation")
    vhat = np.asarray(vhat, dtype=np.float64)
    if vhat.shape[0] != matrix.j:
        raise ValueError(f"expected {matrix.j} imputed values")
    tau = _mrp_draws(None, post, matrix, idx, rng, vhat=vhat)
    return _result_from_draws(tau, "MRP-I", idx, keep_draws, **kw)


def _row_mask(sample, predicate):
    from types import SimpleNamespace

    rows = SimpleNamespace(
        school=sample.school, stratum=sample.stratum, re=sample.re,
        g=sample.g, me=sample.me, sa=sample.sa, mc=sample.mc,
    )
    return np.asarray(predicate(rows), dtype=bool)


def _skip(estimator, label, replication, seed):
    return EstimateResult(
        estimator=estimator, subpop=label, point=float("nan"),
        se=float("nan"), lower95=float("nan"), upper95=float("nan"),
        n_subset=0, replication=replication, seed=seed, skipped=True,
    )


def estimate_all(sample, matrix: PoststratMatrix, subpops, prev, post, rng,
                 enabled=("OLS", "SVY", "MRP-I", "MRP-MI"),
                 replication=0, seed=0):
    """One EstimateResult per enabled estimator per subpopulation.

    `subpops` is a list of (label, predicate) pairs; predicates see the
    covariate arrays of either cells or sample rows.
    """
    results = []
    weights = rake_weights(sample, raking_spec_from_matrix(matrix)) \
        if "SVY" in enabled else None
    vhat = impute_vhat(prev, matrix, rng) if "MRP-I" in enabled else None

    for label, predicate in subpops:
        idx = subpop_index(matrix, predicate, label=label)
        mask = _row_mask(sample, predicate)
        common = dict(replication=replication, seed=seed)
        for estimator in enabled:
            if estimator in ("OLS", "SVY"):
                try:
                    f = (
                        fit_ols(sample, mask)
                        if estimator == "OLS"
                        else fit_svy(sample, weights, mask)
                    )
                    results.append(EstimateResult(
                        estimator=estimator, subpop=label, point=f.point,
                        se=f.se, lower95=f.lower95, upper95=f.upper95,
                        n_subset=f.n, **common,
                    ))
                except ValueError:
                    results.append(_skip(estimator, label, replication, seed))
            elif estimator == "MRP-I":
                results.append(mrp_i(
                    vhat, post, matrix, idx, rng,
                    n_subset=int(mask.sum()), **common,
                ))
            elif estimator == "MRP-MI":
                results.append(mrp_mi(
                    prev, post, matrix, idx, rng,
                    n_subset=int(mask.sum()), **common,
                ))
            else:
                raise ValueError(f"unknown estimator {estimator!r}")
    return results
