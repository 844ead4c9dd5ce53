"""Least-squares baselines and raking weights against statsmodels and a
hand-solved 2x2 iterative-proportional-fitting fixed point."""

from types import SimpleNamespace

import numpy as np
import pytest
import statsmodels.api as sm
from numpy.testing import assert_allclose

from mrpsim.freq import (
    RakingSpec,
    fit_ols,
    fit_svy,
    rake_weights,
    raking_spec_from_matrix,
)


def _toy_sample(n, seed, tau=0.2, noise=0.1, n_schools=6):
    rng = np.random.default_rng(seed)
    school = rng.integers(0, n_schools, size=n).astype(np.int32)
    re = rng.integers(0, 5, size=n).astype(np.int8)
    me = rng.integers(0, 2, size=n).astype(np.int8)
    g = rng.integers(0, 2, size=n).astype(np.int8)
    z = (rng.uniform(size=n) < 0.5).astype(np.int8)
    v = rng.uniform(1.0, 3.5, size=n)
    y = (v + 0.3 + tau * z + 0.05 * me - 0.02 * g
         + 0.01 * re + noise * rng.normal(size=n))
    return SimpleNamespace(
        y=y, v=v, z=z, school=school,
        stratum=np.zeros(n, dtype=np.int8), re=re, me=me, g=g, n=n,
        sa=np.zeros(n, dtype=np.int8), mc=np.zeros(n, dtype=np.int8),
    )


def _design_no_school(s, mask):
    cols = [np.ones(int(mask.sum())), s.z[mask].astype(float)]
    for lev in np.unique(s.re[mask])[1:]:
        cols.append((s.re[mask] == lev).astype(float))
    cols.append(s.me[mask].astype(float))
    cols.append(s.g[mask].astype(float))
    return np.column_stack(cols)


def test_ols_recovers_noiseless_effect():
    s = _toy_sample(500, 0, tau=0.37, noise=0.0)
    s.y = s.v + 0.3 + 0.37 * s.z  # exact additive effect, nothing else
    fit = fit_ols(s)
    assert_allclose(fit.point, 0.37, atol=1e-12)


def test_ols_null_within_three_se():
    s = _toy_sample(2000, 1, tau=0.0, noise=1.0)
    s.y = s.v + np.random.default_rng(2).normal(size=s.n)
    fit = fit_ols(s)
    assert abs(fit.point) < 3 * fit.se


def test_ols_matches_statsmodels():
    s = _toy_sample(800, 3)
    fit = fit_ols(s)
    cols = [np.ones(s.n), s.z.astype(float)]
    for lev in np.unique(s.school)[1:]:
        cols.append((s.school == lev).astype(float))
    for lev in np.unique(s.re)[1:]:
        cols.append((s.re == lev).astype(float))
    cols += [s.me.astype(float), s.g.astype(float)]
    x = np.column_stack(cols)
    ref = sm.OLS(s.y - s.v, x).fit()
    assert_allclose(fit.point, ref.params[1], rtol=1e-10)
    assert_allclose(fit.se, ref.bse[1], rtol=1e-10)


def test_ols_subset_errors():
    s = _toy_sample(100, 4)
    with pytest.raises(ValueError, match="empty subset"):
        fit_ols(s, np.zeros(s.n, dtype=bool))
    with pytest.raises(ValueError, match="single treatment arm"):
        fit_ols(s, s.z == 1)


def test_ols_drops_aliased_column_with_warning():
    s = _toy_sample(300, 5)
    s.me = np.ones(s.n, dtype=np.int8)  # constant, aliased with intercept
    with pytest.warns(UserWarning, match="aliased"):
        fit = fit_ols(s)
    assert "me" in fit.dropped


def test_rake_weights_fixed_point():
    # sample margins equal the target margins, so raking cannot move
    n = 8
    s = SimpleNamespace(
        n=n,
        g=np.array([0, 0, 0, 0, 1, 1, 1, 1]),
        me=np.array([0, 0, 1, 1, 0, 0, 1, 1]),
    )
    spec = RakingSpec(margins={
        "g": (np.array([0, 1]), np.array([0.5, 0.5])),
        "me": (np.array([0, 1]), np.array([0.5, 0.5])),
    })
    w = rake_weights(s, spec)
    assert_allclose(w, np.full(n, 1 / n), rtol=1e-12)


def test_rake_weights_2x2_closed_form():
    counts = {(0, 0): 30, (0, 1): 10, (1, 0): 20, (1, 1): 40}
    g = np.concatenate([np.full(c, k[0]) for k, c in counts.items()])
    me = np.concatenate([np.full(c, k[1]) for k, c in counts.items()])
    s = SimpleNamespace(n=g.size, g=g, me=me)
    r0, c0 = 0.55, 0.4  # target shares of g=0 and me=0
    spec = RakingSpec(
        margins={
            "g": (np.array([0, 1]), np.array([r0, 1 - r0])),
            "me": (np.array([0, 1]), np.array([c0, 1 - c0])),
        },
        tol=1e-12,
        max_iter=2000,
    )
    w = rake_weights(s, spec)
    # IPF keeps the seed table's odds ratio; solve the margin-constrained
    # quadratic for the g=0, me=0 mass directly
    theta = (counts[(0, 0)] * counts[(1, 1)]) / (
        counts[(0, 1)] * counts[(1, 0)])
    roots = np.roots([
        1 - theta,
        (1 - r0 - c0) + theta * (r0 + c0),
        -theta * r0 * c0,
    ])
    x = [r for r in roots.real
         if max(0, r0 + c0 - 1) < r < min(r0, c0)][0]
    want = {(0, 0): x, (0, 1): r0 - x, (1, 0): c0 - x,
            (1, 1): 1 - r0 - c0 + x}
    for key, mass in want.items():
        got = w[(g == key[0]) & (me == key[1])].sum()
        assert_allclose(got, mass, atol=1e-10)


def test_rake_weights_hits_margins(tiny_sample, tiny_matrix):
    spec = raking_spec_from_matrix(tiny_matrix)
    w = rake_weights(tiny_sample, spec)
    assert_allclose(w.sum(), 1.0, rtol=1e-12)
    for var, (levels, shares) in spec.margins.items():
        vals = getattr(tiny_sample, var)
        got = np.array([w[vals == lev].sum() for lev in levels])
        assert_allclose(got, shares, rtol=1e-6)


def test_rake_weights_error_paths():
    s = SimpleNamespace(n=4, g=np.array([0, 0, 1, 1]),
                        me=np.array([0, 0, 0, 0]))
    with pytest.raises(ValueError, match="nonpositive share"):
        RakingSpec(margins={"g": (np.array([0, 1]), np.array([1.0, 0.0]))})
    spec = RakingSpec(margins={
        "me": (np.array([1]), np.array([1.0])),
    })
    with pytest.raises(ValueError, match="missing from margins"):
        rake_weights(s, spec)


def test_rake_weights_nonconvergence():
    # g and me coincide row-by-row, so their margins cannot disagree
    s = SimpleNamespace(n=4, g=np.array([0, 0, 1, 1]),
                        me=np.array([0, 0, 1, 1]))
    spec = RakingSpec(
        margins={
            "g": (np.array([0, 1]), np.array([0.3, 0.7])),
            "me": (np.array([0, 1]), np.array([0.7, 0.3])),
        },
        max_iter=50,
    )
    with pytest.raises(ValueError, match="did not converge"):
        rake_weights(s, spec)


def test_svy_equal_weights_match_plain_ols():
    s = _toy_sample(900, 6)
    fit = fit_svy(s, np.ones(s.n))
    x = _design_no_school(s, np.ones(s.n, dtype=bool))
    ref = sm.OLS(s.y - s.v, x).fit()
    assert_allclose(fit.point, ref.params[1], rtol=1e-10)


def test_svy_sandwich_matches_statsmodels_hc0():
    s = _toy_sample(700, 7)
    rng = np.random.default_rng(8)
    w = rng.uniform(0.2, 3.0, size=s.n)
    fit = fit_svy(s, w)
    x = _design_no_school(s, np.ones(s.n, dtype=bool))
    ref = sm.WLS(s.y - s.v, x, weights=w).fit(cov_type="HC0")
    assert_allclose(fit.point, ref.params[1], rtol=1e-9)
    assert_allclose(fit.se, ref.bse[1], rtol=1e-8)


def test_svy_sandwich_near_classical_when_homoskedastic():
    s = _toy_sample(6000, 9, noise=0.5)
    fit = fit_svy(s, np.ones(s.n))
    x = _design_no_school(s, np.ones(s.n, dtype=bool))
    classical = sm.OLS(s.y - s.v, x).fit().bse[1]
    assert abs(fit.se - classical) / classical < 0.15


def test_svy_weight_scale_invariance():
    s = _toy_sample(400, 10)
    w = np.random.default_rng(11).uniform(0.5, 2.0, size=s.n)
    a = fit_svy(s, w)
    b = fit_svy(s, 2.0 * w)
    assert a.point == b.point
    assert a.se == b.se


def test_svy_validation():
    s = _toy_sample(100, 12)
    with pytest.raises(ValueError, match="positive"):
        fit_svy(s, np.zeros(s.n))
    with pytest.raises(ValueError, match="single treatment arm"):
        fit_svy(s, np.ones(s.n), s.z == 0)
