"""Shared fixtures: one small end-to-end world (layout, population,
sample, cell matrix) reused across test modules, plus builders for
hand-specified cell matrices and point-mass posterior draws."""

import numpy as np
import pytest

from mrpsim.bayes.draws import PosteriorDraws
from mrpsim.coefficients import Coefficients
from mrpsim.design import DesignConfig, draw_sample
from mrpsim.dgp import (
    FinitePopulation,
    StrataLayout,
    assign_treatment,
    build_strata,
    generate_population,
)
from mrpsim.poststrat import build_poststrat_matrix


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: multi-second MCMC or Monte Carlo runs")


@pytest.fixture(scope="session")
def coeffs():
    return Coefficients()


@pytest.fixture(scope="session")
def tiny_layout(coeffs):
    return build_strata(coeffs, 0.002, np.random.default_rng(7))


@pytest.fixture(scope="session")
def tiny_pop(tiny_layout, coeffs):
    rng = np.random.default_rng(11)
    pop = generate_population(tiny_layout, coeffs, rng)
    return assign_treatment(pop, rng)


@pytest.fixture(scope="session")
def tiny_matrix(tiny_pop):
    return build_poststrat_matrix(tiny_pop)


@pytest.fixture(scope="session")
def tiny_sample(tiny_pop):
    cfg = DesignConfig(schools_per_stratum=(2, 2, 2, 2, 1),
                       school_keep_prob=1.0)
    return draw_sample(tiny_pop, cfg, np.random.default_rng(13))


def make_layout(strata, u=None, t=None, scale=1.0):
    strata = np.asarray(strata, dtype=np.int32)
    n = strata.shape[0]
    return StrataLayout(
        stratum=strata,
        size=np.ones(n, dtype=np.int64),
        u=np.zeros(n) if u is None else np.asarray(u, dtype=np.float64),
        t=np.zeros(n) if t is None else np.asarray(t, dtype=np.float64),
        scale=scale,
    )


def make_matrix(cells, layout):
    """Cell matrix from (school, re, g, me, n_c) tuples, built through
    the public population path so the cell ordering is the real one."""
    school, re, g, me, n_c = (np.asarray(col) for col in zip(*cells))
    rows = np.repeat(np.arange(len(cells)), n_c)
    n = rows.size
    pop = FinitePopulation(
        layout=layout,
        school=school[rows].astype(np.int32),
        stratum=layout.stratum[school[rows]].astype(np.int8),
        g=g[rows].astype(np.int8),
        re=re[rows].astype(np.int8),
        me=me[rows].astype(np.int8),
        v=np.full(n, 2.0),
        y0=np.full(n, 2.0),
        y1=np.full(n, 2.0),
        z=np.zeros(n, dtype=np.int8),
    )
    return build_poststrat_matrix(pop)


def point_mass_draws(spec, levels, s, beta, sigma, alpha=None, sigma_f=None,
                     gamma=None, sigma_gamma=None, rho=None):
    """PosteriorDraws whose S draws all equal one parameter point, so
    predictive draws become iid Monte Carlo replicates."""
    factors = list(levels)

    def per_factor(given, default):
        given = given or {}
        return {f: np.tile(np.asarray(given.get(f, default(f)),
                                      dtype=np.float64), (s, 1))
                for f in factors}

    def per_scalar(given, value):
        given = given or {}
        return {f: np.full(s, float(given.get(f, value))) for f in factors}

    alpha = per_factor(alpha, lambda f: np.zeros(len(levels[f])))
    sigma_f = per_scalar(sigma_f, 0.1)
    if spec.has_treatment:
        gamma = per_factor(gamma, lambda f: np.zeros(len(levels[f])))
        sigma_gamma = per_scalar(sigma_gamma, 0.1)
        rho = per_scalar(rho, 0.0)
    else:
        gamma, sigma_gamma, rho = {}, {}, {}
    fixed_names = (("beta_0", "beta_me", "beta_g", "gamma_me", "gamma_g")
                   if spec.has_treatment else ("beta_0", "beta_me", "beta_g"))
    return PosteriorDraws(
        spec=spec,
        levels={f: np.asarray(levels[f]) for f in factors},
        fixed_names=fixed_names,
        n_chains=1,
        draws_per_chain=s,
        beta=np.tile(np.asarray(beta, dtype=np.float64), (s, 1)),
        sigma=np.full(s, float(sigma)),
        alpha=alpha,
        sigma_f=sigma_f,
        gamma=gamma,
        sigma_gamma=sigma_gamma,
        rho=rho,
        diag={},
    )
