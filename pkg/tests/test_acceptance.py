"""End-to-end acceptance checks.

Every test prints one `ACCEPTANCE <name>: PASS|FAIL (...)` line before
asserting, so a verbose run reads as a checklist. The small-run tests
share one cached twenty-replication experiment (see smallrun.py);
everything else builds its own data.
"""

import csv
import math
import subprocess
import time
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss
from scipy import stats

from conftest import make_layout, make_matrix, point_mass_draws
from mrpsim.bayes import fit, post_gpa_spec, prev_gpa_spec
from mrpsim.bayes.model import FACTOR_NAMES
from mrpsim.coefficients import STRATUM_MC, STRATUM_SA
from mrpsim.design import DesignConfig, draw_sample
from mrpsim.dgp import assign_treatment, build_strata, generate_population
from mrpsim.estimators import mrp_mi
from mrpsim.freq import RakingSpec, rake_weights, raking_spec_from_matrix
from mrpsim.harness.config import parse_subpop
from mrpsim.harness.io import read_estimates, read_truth
from mrpsim.harness.metrics import compute_coverage, compute_mse, compute_psr
from mrpsim.oracle import cell_truth, g_formula
from mrpsim.poststrat import (SubpopIndex, build_poststrat_matrix,
                              in_sample_bias, subpop_index)

_REFERENCE_ATE = 0.126
_ASIAN_HIGH_LOW = "SA=High&MC=Low&RE=Asian"


def _line(name, ok, detail=""):
    tail = f" ({detail})" if detail else ""
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}{tail}", flush=True)


@pytest.mark.slow
def test_full_scale_ate_matches_reference(coeffs):
    t0 = time.monotonic()
    label, pred = parse_subpop("ate")
    ates = []
    for seed in range(5):
        rng = np.random.default_rng(1000 + seed)
        layout = build_strata(coeffs, 1.0, rng)
        pop = generate_population(layout, coeffs, rng)
        matrix = build_poststrat_matrix(pop)
        idx = subpop_index(matrix, pred, label=label)
        ates.append(g_formula(idx, matrix, coeffs, layout))
        del pop, matrix
    elapsed = time.monotonic() - t0
    dev = max(abs(a - _REFERENCE_ATE) for a in ates)
    ok = dev <= 0.002 and elapsed < 120.0
    _line("full-scale ATE", ok,
          f"ates={np.round(ates, 5).tolist()}, max dev={dev:.5f}, {elapsed:.0f}s")
    assert ok


@pytest.mark.slow
def test_cell_means_match_direct_simulation(coeffs):
    t0 = time.monotonic()
    rng = np.random.default_rng(2026)
    n = 10_000_000
    lo, hi, sd = coeffs.gpa_lo, coeffs.gpa_hi, coeffs.outcome_sd
    details = []
    ok = True
    for _ in range(3):
        stratum = int(rng.integers(5))
        sa, mc = STRATUM_SA[stratum], STRATUM_MC[stratum]
        race = int(rng.integers(5))
        g = int(rng.integers(2))
        me = int(rng.integers(2))
        u, t = rng.normal(0.0, coeffs.school_noise_sd, size=2)
        want = (cell_truth(1, sa, mc, race, g, me, coeffs, u, t)
                - cell_truth(0, sa, mc, race, g, me, coeffs, u, t))
        mu, s = coeffs.mu_X[sa], coeffs.sigma_X[sa]
        v = stats.truncnorm.rvs((lo - mu) / s, (hi - mu) / s, mu, s,
                                size=n, random_state=rng)
        effect = (coeffs.tau_SA[sa] + coeffs.tau_MC[mc] + coeffs.tau_G[g]
                  + coeffs.tau_RE[race] + coeffs.tau_ME[me] + u)
        m0 = np.clip(v + t, lo, hi)
        m1 = np.clip(v + effect + t, lo, hi)
        del v
        y0 = stats.truncnorm.rvs((lo - m0) / sd, (hi - m0) / sd, m0, sd,
                                 size=n, random_state=rng)
        del m0
        y1 = stats.truncnorm.rvs((lo - m1) / sd, (hi - m1) / sd, m1, sd,
                                 size=n, random_state=rng)
        del m1
        diff = y1 - y0
        del y0, y1
        got = float(diff.mean())
        mc_se = float(diff.std(ddof=1)) / math.sqrt(n)
        del diff
        ok = ok and abs(got - want) < 3.0 * mc_se
        details.append(f"dev={abs(got - want):.2e} vs 3se={3 * mc_se:.2e}")
    elapsed = time.monotonic() - t0
    ok = ok and elapsed < 300.0
    _line("cell mean vs simulation", ok, "; ".join(details) + f", {elapsed:.0f}s")
    assert ok


@pytest.mark.slow
def test_sampling_design_profile(coeffs):
    layout = build_strata(coeffs, 1.0, np.random.default_rng(33))
    design = DesignConfig()
    retained, sizes, resp, shares = [], [], [], []
    for i in range(20):
        rng = np.random.default_rng(4000 + i)
        pop = assign_treatment(generate_population(layout, coeffs, rng), rng)
        sample = draw_sample(pop, design, rng)
        retained.append(len(sample.schools_retained))
        sizes.append(sample.n)
        resp.append(sample.response_rate)
        shares.append(float(np.mean(sample.z)))
        del pop, sample
    worst_share = max(abs(s - 0.5) for s in shares)
    ok = (60 <= np.mean(retained) <= 80
          and 10_500 <= np.mean(sizes) <= 13_500
          and 0.90 <= np.mean(resp) <= 0.94
          and worst_share <= 0.02)
    _line("design profile", ok,
          f"schools={np.mean(retained):.1f}, n={np.mean(sizes):.0f}, "
          f"response={np.mean(resp):.3f}, worst |share-0.5|={worst_share:.4f}")
    assert ok


def _gl_nodes(lo, hi, k):
    x, w = leggauss(k)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def test_poststratified_contrast_matches_quadrature(coeffs):
    lo, hi = coeffs.gpa_lo, coeffs.gpa_hi
    matrix = make_matrix([(0, 1, 0, 1, 40), (0, 3, 1, 0, 60)], make_layout([0]))
    levels = {"re": [1, 3], "school": [0], "mc": [0], "sa": [0], "samc": [0]}
    beta_prev = (2.4, 0.1, -0.05)
    beta_post = (0.3, 0.05, -0.02, 0.06, 0.01)
    alpha_re = [0.05, -0.02]
    gamma_re = [0.10, -0.04]
    sig_prev, sig_post = 0.4, 0.5
    s = 1000
    prev = point_mass_draws(prev_gpa_spec(), levels, s, beta_prev, sig_prev)
    post = point_mass_draws(post_gpa_spec(), levels, s, beta_post, sig_post,
                            alpha={"re": alpha_re}, gamma={"re": gamma_re})
    idx = SubpopIndex(np.arange(matrix.j), "ATE", 1.0)
    res = mrp_mi(prev, post, matrix, idx, np.random.default_rng(404),
                 keep_draws=True)

    yv, yw = _gl_nodes(lo, hi, 240)
    vv, vw = _gl_nodes(lo, hi, 240)

    def tn_mean(m):
        # E[y] for y ~ N(m, sig_post) truncated to [lo, hi]; the
        # normalizing constant cancels in the weighted-node ratio
        pdf = np.exp(-0.5 * ((yv[None, :] - m[:, None]) / sig_post) ** 2)
        return ((pdf * (yv * yw)[None, :]).sum(axis=1)
                / (pdf * yw[None, :]).sum(axis=1))

    pos = np.array([levels["re"].index(r) for r in matrix.re])
    me, g = matrix.me, matrix.g
    eta_prev = beta_prev[0] + beta_prev[1] * me + beta_prev[2] * g
    base = (beta_post[0] + beta_post[1] * me + beta_post[2] * g
            + np.array(alpha_re)[pos])
    lift = beta_post[3] * me + beta_post[4] * g + np.array(gamma_re)[pos]

    want = 0.0
    w_c = matrix.n_c / matrix.n_c.sum()
    for c in range(matrix.j):
        pv = np.exp(-0.5 * ((vv - eta_prev[c]) / sig_prev) ** 2)
        contrast = tn_mean(base[c] + lift[c] + vv) - tn_mean(base[c] + vv)
        want += w_c[c] * float((vw * pv * contrast).sum() / (vw * pv).sum())

    tol = 3.0 * float(res.draws.std(ddof=1)) / math.sqrt(s)
    ok = abs(res.point - want) < tol
    _line("quadrature cross-check", ok,
          f"point={res.point:.5f}, quadrature={want:.5f}, tol={tol:.5f}")
    assert ok


def test_in_sample_bias_matches_two_sum():
    rng = np.random.default_rng(55)
    worst = 0.0
    for i in range(100):
        j = int(rng.integers(2, 60))
        total = j + int(rng.integers(0, 60))
        pos = np.sort(rng.choice(total, size=j, replace=False))
        fake = SimpleNamespace(
            j=total,
            n_c=rng.integers(1, 400, size=total),
            school=np.zeros(total, dtype=np.int64),
            re=np.zeros(total, dtype=np.int64),
            g=np.zeros(total, dtype=np.int64),
            me=np.zeros(total, dtype=np.int64),
        )
        tau = rng.normal(0.0, 0.3, size=total)
        n_samp = rng.integers(0, 50, size=total).astype(np.float64)
        if n_samp[pos].sum() == 0:
            n_samp[pos[0]] = 1.0
        got = in_sample_bias(tau, n_samp, SubpopIndex(pos, f"case {i}", 0.0),
                             fake)
        n_pop = fake.n_c[pos].astype(np.float64)
        direct = (float(tau[pos] @ (n_samp[pos] / n_samp[pos].sum()))
                  - float(tau[pos] @ (n_pop / n_pop.sum())))
        worst = max(worst, abs(got - direct))
    ok = worst <= 1e-12
    _line("in-sample bias identity", ok, f"worst dev={worst:.2e} over 100 cases")
    assert ok


def test_metric_functions_match_naive_loops():
    rng = np.random.default_rng(66)
    worst = {"mse": 0.0, "decomposition": 0.0, "psr": 0.0, "coverage": 0.0}
    for _ in range(100):
        m = int(rng.integers(2, 40))
        truth = float(rng.normal())
        pts = rng.normal(truth, 0.5, size=m)
        ses = rng.uniform(0.1, 1.0, size=m)
        r = compute_mse(pts, truth)
        naive_mse = sum((p - truth) ** 2 for p in pts) / m
        worst["mse"] = max(worst["mse"], abs(r["mse"] - naive_mse))
        worst["decomposition"] = max(
            worst["decomposition"],
            abs(r["mse"] - (r["bias_sq"] + r["variance"])))
        psr = compute_psr(pts, ses, truth)
        naive_psr = (-sum(((p - truth) / s) ** 2 for p, s in zip(pts, ses)) / m
                     - sum(math.log(s * s) for s in ses) / m)
        worst["psr"] = max(worst["psr"], abs(psr - naive_psr))
        lowers = pts - rng.uniform(0.0, 1.0, size=m)
        uppers = pts + rng.uniform(0.0, 1.0, size=m)
        cov = compute_coverage(np.column_stack([lowers, uppers]), truth)
        naive_cov = sum(1.0 for a, b in zip(lowers, uppers)
                        if a <= truth <= b) / m
        worst["coverage"] = max(worst["coverage"], abs(cov - naive_cov))
    ok = all(v <= 1e-12 for v in worst.values())
    _line("metric identities", ok,
          ", ".join(f"{k}={v:.2e}" for k, v in worst.items()))
    assert ok


@pytest.mark.slow
def test_outcome_model_parameter_recovery():
    t0 = time.monotonic()
    spec = post_gpa_spec()
    n = 2000
    hits = total = 0
    worst_rhat = 0.0
    for seed in range(10):
        rng = np.random.default_rng(7000 + seed)
        beta = rng.normal(0.0, 0.2, size=5)
        sigma = 0.45
        codes = {f: rng.integers(0, 3, size=n) for f in FACTOR_NAMES}
        alpha_t, gamma_t = {}, {}
        for f in FACTOR_NAMES:
            a = rng.normal(0.0, 0.2, size=3)
            alpha_t[f] = a - a.mean()
            b = rng.normal(0.0, 0.1, size=3)
            gamma_t[f] = b - b.mean()
        g = rng.integers(0, 2, size=n)
        me = rng.integers(0, 2, size=n)
        z = rng.integers(0, 2, size=n)
        v = rng.uniform(0.8, 3.6, size=n)
        eta = (v + beta[0] + beta[1] * me + beta[2] * g
               + z * (beta[3] * me + beta[4] * g))
        for f in FACTOR_NAMES:
            eta = eta + alpha_t[f][codes[f]] + z * gamma_t[f][codes[f]]
        y = stats.truncnorm.rvs((spec.lo - eta) / sigma,
                                (spec.hi - eta) / sigma, eta, sigma,
                                random_state=rng)
        sample = SimpleNamespace(
            n=n, v=v, y=y, z=z, g=g, me=me,
            re=codes["re"], school=codes["school"], mc=codes["mc"],
            sa=codes["sa"], stratum=codes["samc"],
        )
        draws = fit(spec, sample, chains=4, warmup=1000, draws=1000,
                    seed=7000 + seed)
        for key, d in draws.diag.items():
            if ((key == "sigma" or key.startswith("sigma_"))
                    and np.isfinite(d["rhat"])):
                worst_rhat = max(worst_rhat, d["rhat"])
        truth = {"beta_0": beta[0], "beta_me": beta[1], "beta_g": beta[2],
                 "gamma_me": beta[3], "gamma_g": beta[4], "sigma": sigma}
        for f in FACTOR_NAMES:
            for j in range(3):
                truth[f"alpha_{f}[{j}]"] = alpha_t[f][j]
                truth[f"gamma_{f}[{j}]"] = gamma_t[f][j]
        for name, series in draws.named_series():
            if name not in truth:
                continue
            total += 1
            hits += abs(float(series.mean()) - truth[name]) <= 2.0 * float(
                series.std(ddof=1))
    frac = hits / total
    elapsed = time.monotonic() - t0
    ok = frac >= 0.90 and worst_rhat < 1.05 and elapsed < 600.0
    _line("parameter recovery", ok,
          f"{hits}/{total} within 2 sd ({frac:.2%}), "
          f"worst scale rhat={worst_rhat:.3f}, {elapsed:.0f}s")
    assert ok


@pytest.mark.slow
def test_raking_margins_and_closed_form_ipf(coeffs):
    layout = build_strata(coeffs, 0.05, np.random.default_rng(88))
    design = DesignConfig()
    worst_rel = 0.0
    for i in range(20):
        rng = np.random.default_rng(8800 + i)
        pop = assign_treatment(generate_population(layout, coeffs, rng), rng)
        sample = draw_sample(pop, design, rng)
        spec = raking_spec_from_matrix(build_poststrat_matrix(pop))
        w = rake_weights(sample, spec)
        for var, (levels, shares) in spec.margins.items():
            vals = getattr(sample, var)
            got = np.array([w[vals == lev].sum() for lev in levels])
            worst_rel = max(worst_rel,
                            float(np.max(np.abs(got - shares) / shares)))

    # 2x2 case: iterative proportional fitting preserves the seed odds
    # ratio, so the fitted mass solves one quadratic in the (0,0) cell
    counts = np.array([[3.0, 7.0], [5.0, 2.0]])
    g = np.repeat([0, 0, 1, 1], counts.ravel().astype(int))
    me = np.repeat([0, 1, 0, 1], counts.ravel().astype(int))
    r0, c0 = 0.35, 0.6
    theta = (counts[0, 0] * counts[1, 1]) / (counts[0, 1] * counts[1, 0])
    roots = np.roots([1.0 - theta,
                      (1.0 - r0 - c0) + theta * (r0 + c0),
                      -theta * r0 * c0])
    lo_x, hi_x = max(0.0, r0 + c0 - 1.0), min(r0, c0)
    x = float(next(r.real for r in roots
                   if abs(r.imag) < 1e-15 and lo_x < r.real < hi_x))
    mass = np.array([[x, r0 - x], [c0 - x, 1.0 - r0 - c0 + x]])
    spec2 = RakingSpec(
        margins={"g": (np.array([0, 1]), np.array([r0, 1.0 - r0])),
                 "me": (np.array([0, 1]), np.array([c0, 1.0 - c0]))},
        tol=1e-13, max_iter=2000)
    w2 = rake_weights(SimpleNamespace(n=g.size, g=g, me=me), spec2)
    ipf_dev = float(np.max(np.abs(w2 - mass[g, me] / counts[g, me])))

    ok = worst_rel <= 1e-6 and ipf_dev <= 1e-10
    _line("raking margins", ok,
          f"worst relative margin error={worst_rel:.2e} over 20 samples, "
          f"2x2 closed-form dev={ipf_dev:.2e}")
    assert ok


@pytest.fixture(scope="module")
def small_run():
    import smallrun
    return smallrun.ensure()


def _metrics_rows(path):
    with open(path, newline="") as fh:
        return {(r["estimator"], r["subpopulation"]): r
                for r in csv.DictReader(fh)}


@pytest.mark.slow
def test_small_run_ate_recovery(small_run):
    est = read_estimates(small_run / "estimates.csv")
    truth = read_truth(small_run / "truth.csv")["ATE"]
    details = []
    ok = True
    for name in ("OLS", "SVY", "MRP-I", "MRP-MI"):
        pts = np.array([r["point"] for r in est
                        if r["estimator"] == name
                        and r["subpopulation"] == "ATE" and not r["skipped"]])
        gap = abs(float(pts.mean()) - truth)
        # empirical SE: the sd of the point estimates across replications
        lim = 3.0 * float(pts.std(ddof=1))
        ok = ok and pts.size == 20 and gap <= lim
        details.append(f"{name} dev={gap:.4f} lim={lim:.4f}")
    _line("small-run ATE recovery", ok,
          "; ".join(details) + f"; truth={truth:.4f}")
    assert ok


@pytest.mark.slow
def test_small_run_interval_coverage(small_run):
    row = _metrics_rows(small_run / "metrics.csv")[("MRP-MI", "ATE")]
    cov, n_reps = float(row["coverage"]), int(row["n_reps"])
    ok = cov >= 0.80 - 1e-12 and n_reps == 20
    _line("small-run MRP-MI coverage", ok,
          f"coverage={cov:.2f} over {n_reps} replications")
    assert ok


@pytest.mark.slow
def test_small_run_cate_variance_ordering(small_run):
    rows = _metrics_rows(small_run / "metrics.csv")
    v_mi = float(rows[("MRP-MI", _ASIAN_HIGH_LOW)]["variance"])
    v_ols = float(rows[("OLS", _ASIAN_HIGH_LOW)]["variance"])
    ok = v_mi < v_ols
    _line("small-run CATE variance ordering", ok,
          f"MRP-MI {v_mi:.6f} < OLS {v_ols:.6f} on {_ASIAN_HIGH_LOW}")
    assert ok


@pytest.mark.slow
def test_small_run_mse_ordering(small_run):
    rows = _metrics_rows(small_run / "metrics.csv")
    m_mi = float(rows[("MRP-MI", "ATE")]["mse"])
    m_i = float(rows[("MRP-I", "ATE")]["mse"])
    ok = m_mi <= m_i
    _line("small-run ATE MSE ordering", ok,
          f"MRP-MI {m_mi:.6f} <= MRP-I {m_i:.6f}")
    assert ok


@pytest.mark.slow
def test_small_run_school_effect_pooling(small_run):
    with open(small_run / "school_cates.csv", newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if r["estimator"] == "MRP-MI"]
    assert rows
    obs = [r for r in rows if r["observed"] == "true"]
    hid = [r for r in rows if r["observed"] == "false"]
    ss_pts = ss_truth = 0.0
    for s in sorted({r["stratum"] for r in hid}):
        pts = np.array([float(r["point"]) for r in hid if r["stratum"] == s])
        tr = np.array([float(r["truth"]) for r in hid if r["stratum"] == s])
        ss_pts += float(((pts - pts.mean()) ** 2).sum())
        ss_truth += float(((tr - tr.mean()) ** 2).sum())
    ratio = ss_pts / ss_truth
    op = np.array([float(r["point"]) for r in obs])
    ot = np.array([float(r["truth"]) for r in obs])
    corr = float(np.corrcoef(op, ot)[0, 1])
    ok = ratio < 0.25 and corr > 0.0
    _line("small-run school pooling", ok,
          f"unobserved shrinkage ratio={ratio:.3f}, observed corr={corr:.3f}, "
          f"{len(obs)} observed / {len(hid)} unobserved schools")
    assert ok


@pytest.mark.slow
def test_figure_pipeline_byte_stable(small_run, tmp_path):
    cli = Path(__file__).resolve().parents[1] / "frontend" / "dist" / "cli.js"
    if not cli.exists():
        print("\nACCEPTANCE figure pipeline: SKIP (frontend package not built)",
              flush=True)
        pytest.skip("frontend package not built")
    jobs = {
        "fig2.svg": ["--figure", "fig2",
                     "--in", str(small_run / "prior_predictive.csv"),
                     "--sample", str(small_run / "sample.csv")],
        "fig3.svg": ["--figure", "fig3",
                     "--in", str(small_run / "estimates.csv"),
                     "--truth", str(small_run / "truth.csv")],
        "fig4.svg": ["--figure", "fig4",
                     "--in", str(small_run / "estimates.csv"),
                     "--truth", str(small_run / "truth.csv")],
        "fig5.svg": ["--figure", "fig5",
                     "--in", str(small_run / "school_cates.csv")],
        "metrics.md": ["--figure", "tables",
                       "--in", str(small_run / "metrics.csv")],
    }
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        out.mkdir()
        for name, args in jobs.items():
            proc = subprocess.run(
                ["node", str(cli), *args, "--out", str(out / name)],
                capture_output=True, text=True)
            assert proc.returncode == 0, f"{name}: {proc.stderr}"
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    stable = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()
                 for n in names)
    ok = set(jobs) == set(names) and stable
    _line("figure pipeline", ok, f"files={names}, byte-stable={stable}")
    assert ok
