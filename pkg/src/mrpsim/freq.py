"""Frequentist baselines: fixed-effects least squares, raking weights,
and survey-weighted regression with a heteroskedasticity-robust
sandwich variance.

Both regressions move the unit-coefficient Prev-GPA term to the left
side (regressing Y - V), which is algebraically identical to an offset
and keeps the solver generic. Intervals are Wald, point +- 1.96 se.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "RakingSpec",
    "WeightedFit",
    "fit_ols",
    "fit_svy",
    "rake_weights",
    "raking_spec_from_matrix",
]

_Z95 = 1.959963984540054


@dataclass(frozen=True)
class WeightedFit:
    names: tuple
    coef: np.ndarray
    point: float  # treatment coefficient
    se: float
    lower95: float
    upper95: float
    n: int
    dropped: tuple = ()


@dataclass(frozen=True)
class RakingSpec:
    margins: dict  # variable -> (level values, population shares)
    tol: float = 1e-8
    max_iter: int = 100

    def __post_init__(self):
        for var, (levels, shares) in self.margins.items():
            if np.any(np.asarray(shares) <= 0):
                raise ValueError(f"margin {var!r} has a nonpositive share")


def raking_spec_from_matrix(matrix, tol=1e-8, max_iter=100) -> RakingSpec:
    """Margins for stratum, gender, and race/ethnicity from the exact
    population cell counts."""
    n = matrix.n_p
    margins = {}
    for var, vals in (("stratum", matrix.stratum), ("g", matrix.g), ("re", matrix.re)):
        levels = np.unique(vals)
        shares = np.array(
            [matrix.n_c[vals == lev].sum() / n for lev in levels], dtype=np.float64
        )
        margins[var] = (levels, shares)
    return RakingSpec(margins=margins, tol=tol, max_iter=max_iter)


def _dummies(values, drop_first=True):
    levels = np.unique(values)
    use = levels[1:] if drop_first else levels
    cols = [(values == lev).astype(np.float64) for lev in use]
    return cols, [str(lev) for lev in use]


def _design_ols(sample, mask, with_school):
    y = (sample.y - sample.v)[mask]
    z = sample.z[mask].astype(np.float64)
    cols = [np.ones(mask.sum()), z]
    names = ["intercept", "z"]
    if with_school:
        sc_cols, sc_names = _dummies(sample.school[mask])
        cols += sc_cols
        names += [f"school_{s}" for s in sc_names]
    re_cols, re_names = _dummies(sample.re[mask])
    cols += re_cols
    names += [f"re_{r}" for r in re_names]
    cols.append(sample.me[mask].astype(np.float64))
    names.append("me")
    cols.append(sample.g[mask].astype(np.float64))
    names.append("g")
    return y, np.column_stack(cols), names


def _pivoted_fit(x, y, w, names):
    """Weighted least squares via pivoted QR; aliased columns dropped."""
    sw = np.sqrt(w)
    xw = x * sw[:, None]
    yw = y * sw
    q, r, piv = scipy.linalg.qr(xw, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag[0] * max(xw.shape) * np.finfo(float).eps
    rank = int(np.sum(diag > tol))
    keep = np.sort(piv[:rank])
    dropped = tuple(names[i] for i in sorted(piv[rank:]))
    if dropped:
        warnings.warn(f"dropping aliased columns: {', '.join(dropped)}")
        if "z" in dropped:
            raise ValueError("treatment column is aliased; need both arms")
        xw = xw[:, keep]
        x = x[:, keep]
        names = [names[i] for i in keep]
    coef, *_ = np.linalg.lstsq(xw, yw, rcond=None)
    return x, coef, names, dropped


def fit_ols(sample, mask=None) -> WeightedFit:
    """Least squares of Y - V on treatment, school and race dummies,
    maternal education, and gender; classical standard error."""
    mask = np.ones(sample.n, dtype=bool) if mask is None else np.asarray(mask)
    if mask.sum() == 0:
        raise ValueError("empty subset")
    z = sample.z[mask]
    if z.min() == z.max():
        raise ValueError("subset contains a single treatment arm")
    y, x, names = _design_ols(sample, mask, with_school=True)
    w = np.ones(y.shape[0])
    x, coef, names, dropped = _pivoted_fit(x, y, w, names)
    resid = y - x @ coef
    dof = y.shape[0] - x.shape[1]
    if dof <= 0:
        raise ValueError("no residual degrees of freedom")
    s2 = float(resid @ resid) / dof
    xtx_inv = np.linalg.inv(x.T @ x)
    iz = names.index("z")
    se = float(np.sqrt(s2 * xtx_inv[iz, iz]))
    point = float(coef[iz])
    return WeightedFit(
        names=tuple(names), coef=coef, point=point, se=se,
        lower95=point - _Z95 * se, upper95=point + _Z95 * se,
        n=int(y.shape[0]), dropped=dropped,
    )


def rake_weights(sample, spec: RakingSpec):
    """Iterative proportional fitting to the population margins;
    returns weights rescaled to sum to 1."""
    n = sample.n
    w = np.full(n, 1.0 / n)
    row_vals = {}
    row_codes = {}
    for var, (levels, shares) in spec.margins.items():
        vals = getattr(sample, var)
        codes = np.searchsorted(levels, vals)
        codes = np.clip(codes, 0, len(levels) - 1)
        if np.any(levels[codes] != vals):
            bad = vals[levels[codes] != vals][0]
            raise ValueError(f"sample level {bad!r} of {var!r} missing from margins")
        row_vals[var] = vals
        row_codes[var] = codes

    def max_rel_error(weights):
        worst = 0.0
        for var, (levels, shares) in spec.margins.items():
            got = np.bincount(row_codes[var], weights=weights, minlength=len(levels))
            got = got / weights.sum()
            worst = max(worst, float(np.max(np.abs(got - shares) / shares)))
        return worst

    for _ in range(spec.max_iter):
        for var, (levels, shares) in spec.margins.items():
            got = np.bincount(row_codes[var], weights=w, minlength=len(levels))
            got = got / w.sum()
            with np.errstate(divide="ignore", invalid="ignore"):
                factor = np.where(got > 0, shares / got, 0.0)
            w = w * factor[row_codes[var]]
        if max_rel_error(w) < spec.tol:
            return w / w.sum()
    raise ValueError(
        f"raking did not converge in {spec.max_iter} iterations; "
        f"final max relative margin error {max_rel_error(w):.3e}"
    )


def fit_svy(sample, weights, mask=None) -> WeightedFit:
    """Weighted least squares of Y - V on treatment, race dummies,
    maternal education, and gender (no school terms: the weights carry
    the design), with sandwich standard errors."""
    mask = np.ones(sample.n, dtype=bool) if mask is None else np.asarray(mask)
    if mask.sum() == 0:
        raise ValueError("empty subset")
    z = sample.z[mask]
    if z.min() == z.max():
        raise ValueError("subset contains a single treatment arm")
    w = np.asarray(weights, dtype=np.float64)[mask]
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    w = w / w.sum()
    y, x, names = _design_ols(sample, mask, with_school=False)
    x, coef, names, dropped = _pivoted_fit(x, y, w, names)
    resid = y - x @ coef
    xw = x * w[:, None]
    bread = np.linalg.inv(x.T @ xw)
    meat = (xw * (resid**2)[:, None]).T @ xw
    cov = bread @ meat @ bread
    iz = names.index("z")
    se = float(np.sqrt(cov[iz, iz]))
    point = float(coef[iz])
    return WeightedFit(
        names=tuple(names), coef=coef, point=point, se=se,
        lower95=point - _Z95 * se, upper95=point + _Z95 * se,
        n=int(y.shape[0]), dropped=dropped,
    )
