"""Posterior-predictive draws for poststratification cells.

`CellPredictive` is the vectorized engine: it maps each requested cell
onto the fitted factor levels, draws one effect per (unseen school,
posterior draw) shared by every cell of that school, and produces
(S, n_cells) matrices of predictive draws. Only School may introduce
levels unseen in the fit; its effects are drawn per posterior draw as
a normal centered at that draw's mean of the fitted school effects,
with that draw's school scale (jointly with the treatment interaction
in the outcome model, using the draw's correlation). The scalar
`predictive_prev` / `predictive_post` wrap single-cell requests.
"""

import numpy as np

from ..coefficients import STRATUM_MC, STRATUM_SA
from ..kernels import tn_mean, tn_ppf
from .draws import PosteriorDraws

__all__ = ["CellPredictive", "predictive_prev", "predictive_post"]


def _level_codes(levels, values, factor):
    """Map values to fitted level positions; -1 for unseen."""
    pos = np.searchsorted(levels, values)
    pos = np.clip(pos, 0, len(levels) - 1)
    ok = levels[pos] == values
    if factor != "school" and not np.all(ok):
        bad = np.asarray(values)[~ok][0]
        raise ValueError(f"factor {factor!r} has no fitted level {bad!r}")
    return np.where(ok, pos, -1).astype(np.int64)


def _new_school_effects(draws: PosteriorDraws, n_new, rng):
    """(alpha, gamma) arrays of shape (n_new, S) for unseen schools;
    gamma is None for the covariate model.

    Each draw centers the new school at the mean of that draw's fitted
    school effects, so systematic structure the hierarchy pushed into
    the school level is carried over to schools outside the sample."""
    s = draws.s
    sig = draws.sigma_f["school"]
    abar = draws.alpha["school"].mean(axis=1)
    e1 = rng.normal(size=(n_new, s))
    alpha = abar + sig * e1
    if "school" not in draws.gamma:
        return alpha, None
    sig_g = draws.sigma_gamma["school"]
    rho = draws.rho["school"]
    gbar = draws.gamma["school"].mean(axis=1)
    e2 = rng.normal(size=(n_new, s))
    gamma = gbar + sig_g * (rho * e1 + np.sqrt(1.0 - rho * rho) * e2)
    return alpha, gamma


class CellPredictive:
    """Predictive engine for a fixed cell set (rows of a PoststratMatrix)."""

    def __init__(self, prev: PosteriorDraws, post: PosteriorDraws, matrix,
                 positions, rng):
        if post is not None and prev is not None and post.s != prev.s:
            raise ValueError(
                f"draw counts differ: {prev.s} (covariate) vs {post.s} (outcome)"
            )
        self.prev = prev
        self.post = post
        self.rng = rng
        positions = np.asarray(positions)
        self.n_cells = positions.size

        school = matrix.school[positions]
        stratum = matrix.stratum[positions].astype(np.int64)
        self.cell = {
            "school": school.astype(np.int64),
            "re": matrix.re[positions].astype(np.int64),
            "samc": stratum,
            "sa": STRATUM_SA[stratum].astype(np.int64),
            "mc": STRATUM_MC[stratum].astype(np.int64),
        }
        self.me = matrix.me[positions].astype(np.float64)
        self.g = matrix.g[positions].astype(np.float64)

        # per-model code maps and unseen-school effect draws
        self._codes = {}
        self._new = {}
        for tag, draws in (("prev", prev), ("post", post)):
            if draws is None:
                continue
            codes = {
                f: _level_codes(draws.levels[f], self.cell[f], f)
                for f in draws.levels
            }
            self._codes[tag] = codes
            miss = codes["school"] < 0
            new_ids = np.unique(self.cell["school"][miss])
            a, g_ = _new_school_effects(draws, new_ids.size, rng)
            self._new[tag] = {
                "ids": new_ids,
                "alpha": a,
                "gamma": g_,
                "cell_slot": np.searchsorted(new_ids, self.cell["school"]),
                "is_new": miss,
            }

    def _factor_part(self, tag, z):
        """(S, n_cells) sum of factor effects (+ z * interactions)."""
        draws = self.prev if tag == "prev" else self.post
        codes = self._codes[tag]
        new = self._new[tag]
        out = np.zeros((draws.s, self.n_cells))
        for f, code in codes.items():
            if f == "school":
                seen = ~new["is_new"]
                if np.any(seen):
                    out[:, seen] += draws.alpha[f][:, code[seen]]
                    if z and f in draws.gamma:
                        out[:, seen] += draws.gamma[f][:, code[seen]]
                if np.any(new["is_new"]):
                    slots = new["cell_slot"][new["is_new"]]
                    out[:, new["is_new"]] += new["alpha"][slots].T
                    if z and new["gamma"] is not None:
                        out[:, new["is_new"]] += new["gamma"][slots].T
            else:
                out += draws.alpha[f][:, code]
                if z and f in draws.gamma:
                    out += draws.gamma[f][:, code]
        return out

    def mean_prev(self):
        """(S, n_cells) linear predictor of the covariate model."""
        d = self.prev
        eta = self._factor_part("prev", z=0)
        eta += d.beta_named("beta_0")[:, None]
        eta += np.outer(d.beta_named("beta_me"), self.me)
        eta += np.outer(d.beta_named("beta_g"), self.g)
        return eta

    def mean_post(self, z, vstar):
        """(S, n_cells) linear predictor of the outcome model; vstar is
        (S, n_cells) or (n_cells,)."""
        d = self.post
        eta = self._factor_part("post", z=z)
        eta += d.beta_named("beta_0")[:, None]
        eta += np.outer(d.beta_named("beta_me"), self.me)
        eta += np.outer(d.beta_named("beta_g"), self.g)
        if z:
            eta += np.outer(d.beta_named("gamma_me"), self.me)
            eta += np.outer(d.beta_named("gamma_g"), self.g)
        eta += vstar
        return eta

    def _tn_draw(self, mean, sigma_by_draw):
        """Truncated-normal draw per entry of (S, n_cells) mean."""
        d = self.prev if self.post is None else self.post
        lo, hi = d.spec.lo, d.spec.hi
        out = np.empty_like(mean)
        u = self.rng.uniform(size=mean.shape)
        for j in range(mean.shape[0]):
            out[j] = tn_ppf(u[j], np.ascontiguousarray(mean[j]),
                            float(sigma_by_draw[j]), lo, hi)
        return out

    def sample_vstar(self):
        mean = self.mean_prev()
        lo, hi = self.prev.spec.lo, self.prev.spec.hi
        out = np.empty_like(mean)
        u = self.rng.uniform(size=mean.shape)
        for j in range(mean.shape[0]):
            out[j] = tn_ppf(u[j], np.ascontiguousarray(mean[j]),
                            float(self.prev.sigma[j]), lo, hi)
        return out

    def vhat(self):
        """Analytic per-cell predictive mean of the covariate: average
        over draws of the truncated-normal mean."""
        mean = self.mean_prev()
        lo, hi = self.prev.spec.lo, self.prev.spec.hi
        acc = np.zeros(self.n_cells)
        for j in range(mean.shape[0]):
            acc += tn_mean(np.ascontiguousarray(mean[j]),
                           float(self.prev.sigma[j]), lo, hi)
        return acc / mean.shape[0]

    def sample_y(self, z, vstar):
        mean = self.mean_post(z, vstar)
        return self._tn_draw(mean, self.post.sigma)


def _single_cell_predictive(draws_prev, draws_post, matrix, cell_pos, rng):
    return CellPredictive(draws_prev, draws_post, matrix,
                          np.array([cell_pos]), rng)


def predictive_prev(draws: PosteriorDraws, matrix, cell_pos, j, rng):
    """One covariate predictive draw for cell `cell_pos` at parameter
    draw j. Unseen-school effects are redrawn per call; use
    CellPredictive when draws must be shared across a school's cells."""
    p = _single_cell_predictive(draws, None, matrix, cell_pos, rng)
    mean = p.mean_prev()[j, 0]
    u = np.atleast_1d(rng.uniform())
    return float(tn_ppf(u, np.array([mean]), float(draws.sigma[j]),
                        draws.spec.lo, draws.spec.hi)[0])


def predictive_post(draws: PosteriorDraws, matrix, cell_pos, z, vstar, j, rng):
    """One outcome predictive draw; vstar must lie inside the bounds."""
    if not draws.spec.lo < vstar < draws.spec.hi:
        raise ValueError("vstar outside the outcome bounds")
    p = _single_cell_predictive(None, draws, matrix, cell_pos, rng)
    mean = p.mean_post(z, np.array([vstar]))[j, 0]
    u = np.atleast_1d(rng.uniform())
    return float(tn_ppf(u, np.array([mean]), float(draws.sigma[j]),
                        draws.spec.lo, draws.spec.hi)[0])
