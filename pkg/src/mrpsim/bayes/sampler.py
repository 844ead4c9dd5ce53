"""Adaptive Metropolis-within-Gibbs for the hierarchical models.

Parameterization is non-centered: each factor level carries standard
normal latents (e for intercepts, ft for treatment interactions), with
alpha = sigma_f * e and gamma = sigma_gamma_f * (rho * e +
sqrt(1-rho^2) * ft), so scale updates move through the data likelihood
and the small-scale funnel never pinches the level updates.

Update sweep per iteration:
  1. per-coordinate random walk on the fixed effects
  2. per factor, vectorized per-level updates of e then ft (levels
     partition rows, so one proposal pass serves every level)
  3. per factor, a blocked update of (log sigma, log sigma_gamma,
     atanh rho)
  4. random-walk on log residual sigma
  5. likelihood-invariant moves that cost no likelihood passes, along
     directions the linear predictor cannot see: recenter (a constant
     traded between a factor's intercepts and beta_0), nesting trades
     (a coarse factor level against the fine levels mapping to it:
     each school sits in one stratum, each stratum in one curriculum
     and one achievement band), and gamma exchanges between factor
     pairs. Every prior here is normal in the latents, so the
     conditional along each direction is Gaussian and is drawn
     exactly rather than random-walked; without these draws the
     prior-decided flat subspace dominates the autocorrelation time.
  6. per-factor rescale moves, the centered-coordinate complement of
     update 3: with many rows per level the likelihood pins alpha, so
     a scale can only travel along the alpha-preserving ridge; the
     conditional along that ridge is not Gaussian in the log scale, so
     it is slice sampled (stepping out, then shrinkage), which moves
     every iteration with no tuning; likewise a correlation slide that
     holds gamma fixed.

Updates 5 and 6 repeat several times per sweep because they touch no
likelihood terms. Proposal scales for the likelihood-facing updates
adapt during warmup only (Robbins-Monro toward 0.44 acceptance for
scalar updates, 0.35 for blocks) and freeze afterwards. The cached
linear predictor and per-row log likelihood make each update a single
vector pass.
"""

import numpy as np

from ..kernels import group_sums, tn_loglik_rows
from .draws import PosteriorDraws
from .model import (
    FACTOR_NAMES,
    ModelData,
    ModelSpec,
    model_data_from_sample,
)

__all__ = ["fit"]

_TARGET_SCALAR = 0.44
_TARGET_BLOCK = 0.35


def _logpdf_normal(x, mean, sd):
    return -0.5 * ((x - mean) / sd) ** 2


def _half_normal_logprior_ls(ls, sd):
    # density of sigma=exp(ls): half-normal(sd), plus the log Jacobian
    sigma = np.exp(ls)
    return -0.5 * (sigma / sd) ** 2 + ls


def _half_t_logprior_ls(ls, df, scale):
    sigma = np.exp(ls)
    return -0.5 * (df + 1.0) * np.log1p(sigma * sigma / (df * scale * scale)) + ls


def _rho_logprior_zr(zr):
    # uniform on rho=tanh(zr); Jacobian is 1 - rho^2
    rho = np.tanh(zr)
    return np.log1p(-rho * rho)


def _slice_offset(logf, rng, width=1.0, max_steps=30):
    """One slice-sampling draw of an offset t from the 1-d density
    exp(logf), starting at t=0 where logf must be finite."""
    y = logf(0.0) - rng.standard_exponential()
    lo = -width * rng.uniform()
    hi = lo + width
    for _ in range(max_steps):
        if logf(lo) <= y:
            break
        lo -= width
    for _ in range(max_steps):
        if logf(hi) <= y:
            break
        hi += width
    for _ in range(100):
        t = rng.uniform(lo, hi)
        if logf(t) > y:
            return t
        if t < 0.0:
            lo = t
        else:
            hi = t
    return 0.0


def _nested_pairs(data: ModelData):
    """(fine, coarse) -> level map, for factor pairs where every fine
    level co-occurs with exactly one coarse level; transitive pairs are
    dropped since the two direct trades compose to the same move."""
    names = list(data.codes)
    nested = {}
    if data.n == 0:
        return nested
    for fine in names:
        for coarse in names:
            if fine == coarse:
                continue
            u = np.unique(
                np.stack([data.codes[fine], data.codes[coarse]], axis=1),
                axis=0,
            )
            if u.shape[0] == len(data.levels[fine]):
                m = np.empty(len(data.levels[fine]), dtype=np.int64)
                m[u[:, 0]] = u[:, 1]
                nested[(fine, coarse)] = m
    minimal = {}
    for fine, coarse in nested:
        transitive = any(
            (fine, mid) in nested and (mid, coarse) in nested
            for mid in names
            if mid not in (fine, coarse)
        )
        if not transitive:
            minimal[(fine, coarse)] = nested[(fine, coarse)]
    return minimal


class _Chain:
    def __init__(self, spec: ModelSpec, data: ModelData, rng):
        self.spec = spec
        self.data = data
        self.rng = rng
        self.factors = list(data.codes)
        n = data.n
        k = data.x_fixed.shape[1] if n else len(data.fixed_names)

        self.fixed = np.zeros(k)
        self.fixed[0] = spec.intercept_prior_mean + 0.1 * spec.fixed_prior_sd * rng.normal()
        self.fixed[1:] = 0.1 * spec.fixed_prior_sd * rng.normal(size=k - 1)
        self.e = {}
        self.ft = {}
        self.ls = {}
        self.lsg = {}
        self.zr = {}
        for f in self.factors:
            n_lev = len(data.levels[f])
            self.e[f] = 0.1 * rng.normal(size=n_lev)
            self.ls[f] = np.log(0.5 * spec.scale_prior_sd) + 0.2 * rng.normal()
            if spec.has_treatment:
                self.ft[f] = 0.1 * rng.normal(size=n_lev)
                self.lsg[f] = np.log(0.5 * spec.gamma_scale_prior_sd) + 0.2 * rng.normal()
                self.zr[f] = 0.0
        if n:
            resid = data.y - data.offset - float(np.mean(data.y - data.offset))
            s0 = max(float(np.std(resid)), 0.05)
        else:
            s0 = 1.0
        self.ls_res = np.log(s0) + 0.1 * rng.normal()

        # coarse level a of one factor traded against the fine levels
        # mapping to it in another; eta never moves along these
        self.trades = []
        for (fine, coarse), level_map in _nested_pairs(data).items():
            for a in range(len(data.levels[coarse])):
                fine_levels = np.flatnonzero(level_map == a)
                if fine_levels.size:
                    self.trades.append((coarse, a, fine, fine_levels))

        # proposal log-scales (only the likelihood-facing MH moves and
        # the rescale/rho MH moves adapt; the invariant draws are exact)
        self.fixed_pairs = []
        for j, name in enumerate(data.fixed_names):
            if name.startswith("gamma_"):
                partner = "beta_" + name[len("gamma_"):]
                if partner in data.fixed_names:
                    self.fixed_pairs.append(
                        (data.fixed_names.index(partner), j))
        self.p_pair = np.full(len(self.fixed_pairs), np.log(0.05))
        self.p_fixed = np.full(k, np.log(0.05))
        self.p_e = {f: np.full(len(data.levels[f]), np.log(0.3)) for f in self.factors}
        self.p_ft = {f: np.full(len(data.levels[f]), np.log(0.3)) for f in self.factors}
        self.p_hyper = {f: np.log(0.3) for f in self.factors}
        self.p_res = np.log(0.05)

        self.eta = self._full_eta()
        self.rows = self._loglik_rows(self.eta, np.exp(self.ls_res))
        self.total = float(self.rows.sum())

    # ---- derived quantities

    def _sigma(self, f):
        return float(np.exp(self.ls[f]))

    def _gamma_vec(self, f, e=None, lsg=None, zr=None):
        e = self.e[f] if e is None else e
        lsg = self.lsg[f] if lsg is None else lsg
        zr = self.zr[f] if zr is None else zr
        rho = np.tanh(zr)
        return np.exp(lsg) * (rho * e + np.sqrt(1.0 - rho * rho) * self.ft[f])

    def _full_eta(self):
        d = self.data
        eta = d.offset + d.x_fixed @ self.fixed if d.n else np.zeros(0)
        for f in self.factors:
            alpha = self._sigma(f) * self.e[f]
            eta = eta + alpha[d.codes[f]]
            if self.spec.has_treatment:
                eta = eta + d.z * self._gamma_vec(f)[d.codes[f]]
        return np.ascontiguousarray(eta)

    def _loglik_rows(self, eta, sigma):
        if self.data.n == 0:
            return np.zeros(0)
        return tn_loglik_rows(self.data.y, eta, sigma, self.spec.lo, self.spec.hi)

    # ---- adaptation

    def _adapt(self, logscale, alpha, target, step):
        return logscale + step * (alpha - target)

    # ---- update steps

    def update_fixed(self, step):
        spec, d = self.spec, self.data
        sigma_res = np.exp(self.ls_res)
        for j in range(self.fixed.size):
            delta = self.rng.normal() * np.exp(self.p_fixed[j])
            mean = spec.intercept_prior_mean if j == 0 else 0.0
            eta_p = self.eta + (d.x_fixed[:, j] * delta if d.n else 0.0)
            rows_p = self._loglik_rows(eta_p, sigma_res)
            logr = (
                (float(rows_p.sum()) - self.total if d.n else 0.0)
                + _logpdf_normal(self.fixed[j] + delta, mean, spec.fixed_prior_sd)
                - _logpdf_normal(self.fixed[j], mean, spec.fixed_prior_sd)
            )
            alpha = min(1.0, np.exp(min(logr, 0.0)))
            if np.log(self.rng.uniform()) < logr:
                self.fixed[j] += delta
                if d.n:
                    self.eta = np.ascontiguousarray(eta_p)
                    self.rows = rows_p
                    self.total = float(rows_p.sum())
            if step:
                self.p_fixed[j] = self._adapt(
                    self.p_fixed[j], alpha, _TARGET_SCALAR, step)

    def update_fixed_rotations(self, step):
        """Treated rows see only the sum of a paired beta and gamma
        fixed effect, so the pair is strongly anti-correlated and
        per-coordinate walks cross its ellipse slowly; this walks the
        (delta, -delta) diagonal, which only control rows can see."""
        spec, d = self.spec, self.data
        if d.n == 0:
            return
        sigma_res = np.exp(self.ls_res)
        for i, (jb, jg) in enumerate(self.fixed_pairs):
            delta = self.rng.normal() * np.exp(self.p_pair[i])
            direction = d.x_fixed[:, jb] - d.x_fixed[:, jg]
            eta_p = self.eta + direction * delta
            rows_p = self._loglik_rows(eta_p, sigma_res)
            logr = (
                float(rows_p.sum()) - self.total
                + _logpdf_normal(self.fixed[jb] + delta, 0.0, spec.fixed_prior_sd)
                - _logpdf_normal(self.fixed[jb], 0.0, spec.fixed_prior_sd)
                + _logpdf_normal(self.fixed[jg] - delta, 0.0, spec.fixed_prior_sd)
                - _logpdf_normal(self.fixed[jg], 0.0, spec.fixed_prior_sd)
            )
            alpha = min(1.0, np.exp(min(logr, 0.0)))
            if np.log(self.rng.uniform()) < logr:
                self.fixed[jb] += delta
                self.fixed[jg] -= delta
                self.eta = np.ascontiguousarray(eta_p)
                self.rows = rows_p
                self.total = float(rows_p.sum())
            if step:
                self.p_pair[i] = self._adapt(
                    self.p_pair[i], alpha, _TARGET_SCALAR, step)

    def _update_levels(self, f, latent, step):
        """Vectorized per-level update of e (latent='e') or ft."""
        spec, d = self.spec, self.data
        codes = d.codes[f]
        n_lev = len(d.levels[f])
        sigma_res = np.exp(self.ls_res)
        cur = self.e[f] if latent == "e" else self.ft[f]
        pscale = self.p_e[f] if latent == "e" else self.p_ft[f]

        delta = self.rng.normal(size=n_lev) * np.exp(pscale)
        if latent == "e":
            d_alpha = self._sigma(f) * delta
            row_delta = d_alpha[codes] if d.n else None
            if spec.has_treatment and d.n:
                rho = np.tanh(self.zr[f])
                d_gamma = np.exp(self.lsg[f]) * rho * delta
                row_delta = row_delta + d.z * d_gamma[codes]
        else:
            rho = np.tanh(self.zr[f])
            d_gamma = np.exp(self.lsg[f]) * np.sqrt(1.0 - rho * rho) * delta
            row_delta = d.z * d_gamma[codes] if d.n else None

        if d.n:
            eta_p = self.eta + row_delta
            rows_p = self._loglik_rows(eta_p, sigma_res)
            cur_group = group_sums(self.rows, codes, n_lev)
            prop_group = group_sums(rows_p, codes, n_lev)
        else:
            cur_group = prop_group = np.zeros(n_lev)
        logr = prop_group - cur_group - 0.5 * ((cur + delta) ** 2 - cur**2)
        accept = np.log(self.rng.uniform(size=n_lev)) < logr
        if np.any(accept):
            cur[accept] += delta[accept]
            if d.n:
                row_acc = accept[codes]
                np.copyto(self.eta, eta_p, where=row_acc)
                np.copyto(self.rows, rows_p, where=row_acc)
                self.total = float(self.rows.sum())
        if step:
            alpha = np.minimum(1.0, np.exp(np.minimum(logr, 0.0)))
            adapted = self._adapt(pscale, alpha, _TARGET_SCALAR, step)
            np.copyto(pscale, adapted)

    def update_hyper(self, f, step):
        spec, d = self.spec, self.data
        codes = d.codes[f]
        sigma_res = np.exp(self.ls_res)
        scale = np.exp(self.p_hyper[f])

        ls_p = self.ls[f] + self.rng.normal() * scale
        lp_cur = _half_normal_logprior_ls(self.ls[f], spec.scale_prior_sd)
        lp_prop = _half_normal_logprior_ls(ls_p, spec.scale_prior_sd)
        d_alpha = (np.exp(ls_p) - self._sigma(f)) * self.e[f]
        row_delta = d_alpha[codes] if d.n else None
        lsg_p = zr_p = None
        if spec.has_treatment:
            lsg_p = self.lsg[f] + self.rng.normal() * scale
            zr_p = self.zr[f] + self.rng.normal() * scale
            lp_cur += _half_normal_logprior_ls(self.lsg[f], spec.gamma_scale_prior_sd)
            lp_cur += _rho_logprior_zr(self.zr[f])
            lp_prop += _half_normal_logprior_ls(lsg_p, spec.gamma_scale_prior_sd)
            lp_prop += _rho_logprior_zr(zr_p)
            if d.n:
                d_gamma = self._gamma_vec(f, lsg=lsg_p, zr=zr_p) - self._gamma_vec(f)
                row_delta = row_delta + d.z * d_gamma[codes]

        if d.n:
            eta_p = self.eta + row_delta
            rows_p = self._loglik_rows(eta_p, sigma_res)
            dlik = float(rows_p.sum()) - self.total
        else:
            dlik = 0.0
        logr = dlik + lp_prop - lp_cur
        alpha = min(1.0, np.exp(min(logr, 0.0)))
        if np.log(self.rng.uniform()) < logr:
            self.ls[f] = ls_p
            if spec.has_treatment:
                self.lsg[f] = lsg_p
                self.zr[f] = zr_p
            if d.n:
                self.eta = np.ascontiguousarray(eta_p)
                self.rows = rows_p
                self.total = float(rows_p.sum())
        if step:
            self.p_hyper[f] = self._adapt(self.p_hyper[f], alpha, _TARGET_BLOCK, step)

    def update_residual(self, step):
        spec = self.spec
        ls_p = self.ls_res + self.rng.normal() * np.exp(self.p_res)
        rows_p = self._loglik_rows(self.eta, np.exp(ls_p))
        logr = (
            (float(rows_p.sum()) - self.total if self.data.n else 0.0)
            + _half_t_logprior_ls(ls_p, spec.sigma_prior_df, spec.sigma_prior_scale)
            - _half_t_logprior_ls(self.ls_res, spec.sigma_prior_df, spec.sigma_prior_scale)
        )
        alpha = min(1.0, np.exp(min(logr, 0.0)))
        if np.log(self.rng.uniform()) < logr:
            self.ls_res = ls_p
            if self.data.n:
                self.rows = rows_p
                self.total = float(rows_p.sum())
        if step:
            self.p_res = self._adapt(self.p_res, alpha, _TARGET_SCALAR, step)

    def _ft_coef(self, f):
        """c such that ft -= c * d_alpha keeps gamma fixed when e moves
        by d_alpha / sigma_f; None when rho is pinned at +-1."""
        if not self.spec.has_treatment:
            return 0.0
        rho = np.tanh(self.zr[f])
        root = np.sqrt(1.0 - rho * rho)
        if root < 1e-6:
            return None
        return rho / (self._sigma(f) * root)

    def update_recenter(self, f):
        """Exact draw of the constant traded between beta_0 and factor
        f's intercepts; the linear predictor cannot see it, and all the
        priors are normal in it."""
        spec = self.spec
        sigma = self._sigma(f)
        c = self._ft_coef(f)
        if c is None:
            return
        k = self.e[f].size
        sd2 = spec.fixed_prior_sd**2
        a = k / sigma**2 + k * c * c + 1.0 / sd2
        b = -float(np.sum(self.e[f])) / sigma
        b += (self.fixed[0] - spec.intercept_prior_mean) / sd2
        if spec.has_treatment:
            b += c * float(np.sum(self.ft[f]))
        delta = b / a + self.rng.normal() / np.sqrt(a)
        self.e[f] = self.e[f] + delta / sigma
        if spec.has_treatment:
            self.ft[f] = self.ft[f] - c * delta
        self.fixed[0] -= delta

    def update_rescale(self, f):
        """Draw sigma_f along the alpha-preserving ridge: e absorbs the
        scale change (and ft compensates so gamma is fixed too), which
        is exactly a centered-coordinate draw of sigma_f given alpha.
        The flow t -> (ls + t, e * exp(-t)) has log-Jacobian -t * k."""
        spec = self.spec
        e = self.e[f]
        k = e.size
        ls = self.ls[f]
        sum_e2 = float(np.sum(e * e))
        ce = None
        ft = None
        if spec.has_treatment:
            rho = np.tanh(self.zr[f])
            root = np.sqrt(1.0 - rho * rho)
            if root < 1e-6:
                return
            ft = self.ft[f]
            ce = rho * e / root

        def logf(t):
            lp = (
                _half_normal_logprior_ls(ls + t, spec.scale_prior_sd)
                - 0.5 * sum_e2 * np.exp(-2.0 * t)
                - t * k
            )
            if ce is not None:
                ft_t = ft + ce * (1.0 - np.exp(-t))
                lp -= 0.5 * float(np.sum(ft_t * ft_t))
            return lp

        t = _slice_offset(logf, self.rng)
        if t == 0.0:
            return
        self.ls[f] = ls + t
        self.e[f] = e * np.exp(-t)
        if ce is not None:
            self.ft[f] = ft + ce * (1.0 - np.exp(-t))

    def update_rescale_gamma(self, f):
        """Same ridge draw for sigma_gamma_f, holding gamma fixed."""
        spec = self.spec
        if not spec.has_treatment:
            return
        rho = np.tanh(self.zr[f])
        root = np.sqrt(1.0 - rho * rho)
        if root < 1e-6:
            return
        lsg = self.lsg[f]
        ft = self.ft[f]
        k = ft.size
        ce = rho * self.e[f] / root

        def logf(t):
            shrink = np.exp(-t)
            ft_t = shrink * ft + (shrink - 1.0) * ce
            return (
                _half_normal_logprior_ls(lsg + t, spec.gamma_scale_prior_sd)
                - 0.5 * float(np.sum(ft_t * ft_t))
                - t * k
            )

        t = _slice_offset(logf, self.rng)
        if t == 0.0:
            return
        shrink = np.exp(-t)
        self.lsg[f] = lsg + t
        self.ft[f] = shrink * ft + (shrink - 1.0) * ce

    def update_rho_slide(self, f):
        """Slide the correlation with gamma held fixed; ft absorbs it.
        The map ft -> (w - rho' e) / root' has log-Jacobian
        k * (log root - log root')."""
        spec = self.spec
        if not spec.has_treatment:
            return
        zr = self.zr[f]
        rho = np.tanh(zr)
        root = np.sqrt(1.0 - rho * rho)
        if root < 1e-6:
            return
        e = self.e[f]
        k = e.size
        w = rho * e + root * self.ft[f]

        def logf(t):
            rho_t = np.tanh(zr + t)
            root_t = np.sqrt(1.0 - rho_t * rho_t)
            if root_t < 1e-6:
                return -np.inf
            ft_t = (w - rho_t * e) / root_t
            return (
                _rho_logprior_zr(zr + t)
                - 0.5 * float(np.sum(ft_t * ft_t))
                - k * np.log(root_t)
            )

        t = _slice_offset(logf, self.rng)
        if t == 0.0:
            return
        rho_t = np.tanh(zr + t)
        root_t = np.sqrt(1.0 - rho_t * rho_t)
        self.zr[f] = zr + t
        self.ft[f] = (w - rho_t * e) / root_t

    def update_trade(self, i):
        """Exact draw of the shift between a coarse factor level and
        its fine levels; no linear predictor changes."""
        spec = self.spec
        coarse, a, fine, fine_levels = self.trades[i]
        sig_c, sig_f = self._sigma(coarse), self._sigma(fine)
        c_c, c_f = self._ft_coef(coarse), self._ft_coef(fine)
        if c_c is None or c_f is None:
            return
        m = fine_levels.size
        va = 1.0 / sig_c**2 + c_c * c_c + m * (1.0 / sig_f**2 + c_f * c_f)
        b = -self.e[coarse][a] / sig_c
        b += float(np.sum(self.e[fine][fine_levels])) / sig_f
        if spec.has_treatment:
            b += c_c * self.ft[coarse][a]
            b -= c_f * float(np.sum(self.ft[fine][fine_levels]))
        delta = b / va + self.rng.normal() / np.sqrt(va)
        self.e[coarse][a] += delta / sig_c
        self.e[fine][fine_levels] -= delta / sig_f
        if spec.has_treatment:
            self.ft[coarse][a] -= c_c * delta
            self.ft[fine][fine_levels] += c_f * delta

    def _gamma_unit(self, f):
        """d such that ft += d * delta shifts gamma by delta."""
        rho = np.tanh(self.zr[f])
        root = np.sqrt(1.0 - rho * rho)
        if root < 1e-6:
            return None
        return 1.0 / (np.exp(self.lsg[f]) * root)

    def update_gamma_trade(self, i):
        """Exact draw of the same trade on the gamma side only."""
        if not self.spec.has_treatment:
            return
        coarse, a, fine, fine_levels = self.trades[i]
        d_c, d_f = self._gamma_unit(coarse), self._gamma_unit(fine)
        if d_c is None or d_f is None:
            return
        m = fine_levels.size
        va = d_c * d_c + m * d_f * d_f
        b = -self.ft[coarse][a] * d_c
        b += d_f * float(np.sum(self.ft[fine][fine_levels]))
        delta = b / va + self.rng.normal() / np.sqrt(va)
        self.ft[coarse][a] += d_c * delta
        self.ft[fine][fine_levels] -= d_f * delta

    def update_exchange(self, f1, f2):
        """Exact draw of the constant traded between two factors' gamma
        vectors; treated rows see +delta-delta = 0."""
        if not self.spec.has_treatment:
            return
        d1, d2 = self._gamma_unit(f1), self._gamma_unit(f2)
        if d1 is None or d2 is None:
            return
        k1, k2 = self.ft[f1].size, self.ft[f2].size
        va = k1 * d1 * d1 + k2 * d2 * d2
        b = -d1 * float(np.sum(self.ft[f1])) + d2 * float(np.sum(self.ft[f2]))
        delta = b / va + self.rng.normal() / np.sqrt(va)
        self.ft[f1] = self.ft[f1] + d1 * delta
        self.ft[f2] = self.ft[f2] - d2 * delta

    # ---- one full sweep

    def sweep(self, step):
        self.update_fixed(step)
        self.update_fixed_rotations(step)
        for f in self.factors:
            self._update_levels(f, "e", step)
            if self.spec.has_treatment:
                self._update_levels(f, "ft", step)
        for f in self.factors:
            self.update_hyper(f, step)
        self.update_residual(step)
        for _ in range(3):
            for f in self.factors:
                self.update_rescale(f)
                self.update_rescale_gamma(f)
                self.update_rho_slide(f)
            for f in self.factors:
                self.update_recenter(f)
            for i in range(len(self.trades)):
                self.update_trade(i)
                self.update_gamma_trade(i)
            if self.spec.has_treatment:
                for j1 in range(len(self.factors)):
                    for j2 in range(j1 + 1, len(self.factors)):
                        self.update_exchange(self.factors[j1],
                                             self.factors[j2])

    def snapshot(self, store, i):
        spec = self.spec
        store["beta"][i] = self.fixed
        store["sigma"][i] = np.exp(self.ls_res)
        for f in self.factors:
            sigma = self._sigma(f)
            store[f"alpha_{f}"][i] = sigma * self.e[f]
            store[f"sigma_{f}"][i] = sigma
            if spec.has_treatment:
                store[f"gamma_{f}"][i] = self._gamma_vec(f)
                store[f"sigma_gamma_{f}"][i] = np.exp(self.lsg[f])
                store[f"rho_{f}"][i] = np.tanh(self.zr[f])


def _run_chain(spec, data, warmup, draws, rng):
    chain = _Chain(spec, data, rng)
    store = {
        "beta": np.empty((draws, chain.fixed.size)),
        "sigma": np.empty(draws),
    }
    for f in chain.factors:
        n_lev = len(data.levels[f])
        store[f"alpha_{f}"] = np.empty((draws, n_lev))
        store[f"sigma_{f}"] = np.empty(draws)
        if spec.has_treatment:
            store[f"gamma_{f}"] = np.empty((draws, n_lev))
            store[f"sigma_gamma_{f}"] = np.empty(draws)
            store[f"rho_{f}"] = np.empty(draws)
    for t in range(warmup):
        chain.sweep(step=min(0.3, 3.0 / np.sqrt(t + 10.0)))
    for i in range(draws):
        chain.sweep(step=0.0)
        chain.snapshot(store, i)
    return store


def fit(spec: ModelSpec, data, chains=4, warmup=1000, draws=250, seed=None) -> PosteriorDraws:
    """Sample the posterior; `data` is an ObservedSample or ModelData.

    Returns chains*draws retained draws. A convergence warning (any
    monitored R-hat > 1.05) is recorded on the result, never raised.
    """
    if not isinstance(data, ModelData):
        data = model_data_from_sample(spec, data)
    if chains < 1 or warmup < 0 or draws < 1:
        raise ValueError("need chains >= 1, warmup >= 0, draws >= 1")
    seed_seq = np.random.SeedSequence(seed)
    stores = []
    for child in seed_seq.spawn(chains):
        rng = np.random.default_rng(child)
        stores.append(_run_chain(spec, data, warmup, draws, rng))
    return PosteriorDraws.from_chain_stores(spec, data, stores)
