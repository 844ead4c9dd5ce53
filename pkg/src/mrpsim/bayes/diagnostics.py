"""Convergence diagnostics: rank-normalized split R-hat and bulk ESS.

Chains are split in half, draws are rank-normalized (fractional ranks
mapped through the normal quantile function), and the classic
between/within variance ratio is taken as the larger of the statistic
on the z-scores and on their folded (|x - median|) counterparts. ESS
combines per-chain autocovariances through Geyer's initial positive
and monotone sequence estimators.
"""

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

__all__ = ["bulk_ess", "diagnostics", "rhat_rank_normalized"]


def _split_chains(x):
    c, n = x.shape
    half = n // 2
    return np.vstack([x[:, :half], x[:, n - half:]])


def _z_scale(x):
    rank = rankdata(x, method="average").reshape(x.shape)
    return ndtri((rank - 0.5) / x.size)


def _rhat_base(x):
    c, n = x.shape
    chain_mean = x.mean(axis=1)
    chain_var = x.var(axis=1, ddof=1)
    between = n * chain_mean.var(ddof=1)
    within = chain_var.mean()
    return np.sqrt((between / within + n - 1) / n)


def rhat_rank_normalized(x):
    """x: (chains, draws). NaN when undefined (constant input)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 4:
        return float("nan")
    if np.allclose(x, x.ravel()[0]):
        return float("nan")
    split = _split_chains(x)
    bulk = _rhat_base(_z_scale(split))
    folded = _rhat_base(_z_scale(np.abs(split - np.median(split))))
    return float(max(bulk, folded))


def _chain_autocov(x):
    # FFT autocovariance per chain, biased normalization
    c, n = x.shape
    m = 2 ** int(np.ceil(np.log2(2 * n)))
    xc = x - x.mean(axis=1, keepdims=True)
    f = np.fft.rfft(xc, n=m, axis=1)
    acov = np.fft.irfft(f * np.conj(f), n=m, axis=1)[:, :n].real
    return acov / n


def _ess_base(x):
    c, n = x.shape
    if n < 4:
        return float("nan")
    acov = _chain_autocov(x)
    chain_var = acov[:, 0] * n / (n - 1.0)
    mean_var = chain_var.mean()
    var_plus = mean_var * (n - 1.0) / n
    if c > 1:
        var_plus += x.mean(axis=1).var(ddof=1)
    if var_plus == 0:
        return float("nan")

    rho_hat = np.zeros(n)
    rho_hat[0] = 1.0
    rho_odd = 1.0 - (mean_var - acov[:, 1].mean()) / var_plus
    rho_hat[1] = rho_odd
    # Geyer initial positive sequence
    t = 1
    rho_even = 0.0
    while t < n - 2:
        rho_even = 1.0 - (mean_var - acov[:, t + 1].mean()) / var_plus
        rho_odd = 1.0 - (mean_var - acov[:, t + 2].mean()) / var_plus
        if rho_even + rho_odd < 0:
            break
        rho_hat[t + 1] = rho_even
        rho_hat[t + 2] = rho_odd
        t += 2
    max_t = t - 2 if (rho_even + rho_odd < 0 and t > 1) else t
    # Geyer initial monotone sequence
    t = 1
    while t <= max_t - 2:
        if rho_hat[t + 1] + rho_hat[t + 2] > rho_hat[t - 1] + rho_hat[t]:
            rho_hat[t + 1] = (rho_hat[t - 1] + rho_hat[t]) / 2.0
            rho_hat[t + 2] = rho_hat[t + 1]
        t += 2
    ess = c * n
    tau_hat = -1.0 + 2.0 * np.sum(rho_hat[: max_t + 1]) + np.sum(rho_hat[max_t + 1: max_t + 2])
    tau_hat = max(tau_hat, 1.0 / np.log10(ess)) if ess > 10 else max(tau_hat, 1e-3)
    return float(ess / tau_hat)


def bulk_ess(x):
    """Bulk effective sample size on rank-normalized split chains."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 4:
        return float("nan")
    if np.allclose(x, x.ravel()[0]):
        return float("nan")
    return _ess_base(_z_scale(_split_chains(x)))


def diagnostics(param_chains):
    """dict name -> (chains, draws) array => dict name -> {rhat, ess}."""
    out = {}
    for name, x in param_chains.items():
        out[name] = {"rhat": rhat_rank_normalized(x), "ess": bulk_ess(x)}
    return out
