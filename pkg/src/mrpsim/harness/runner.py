"""Experiment orchestration: M replications against one fixed layout.

The school layout (sizes and noises) is drawn once from the master
seed; individuals are regenerated for every replication, and a separate
reference population pins down the truth table. Replications run in a
worker pool with seeds spawned per replication, so results do not
depend on scheduling; a failed replication is recorded with its seed
and excluded from metrics, never silently dropped.
"""

import hashlib
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import fields

import numpy as np

from ..bayes import fit, post_gpa_spec, prev_gpa_spec
from ..coefficients import Coefficients
from ..design import DesignConfig, draw_sample
from ..dgp import assign_treatment, build_strata, generate_population
from ..estimators import estimate_all, impute_vhat, mrp_i, mrp_mi
from ..kernels import BACKEND
from ..oracle import school_truths, truth_table
from ..poststrat import SubpopIndex, build_poststrat_matrix, subpop_index
from .config import ExperimentConfig, parse_subpop
from .io import (
    f17,
    write_diagnostics,
    write_estimates,
    write_metrics,
    write_school_cates,
    write_truth,
)
from .metrics import metrics_from_estimates

__all__ = ["run_experiment", "school_cates"]


def coefficients_hash(coeffs: Coefficients):
    """Stable fingerprint of every generating coefficient."""
    h = hashlib.sha256()
    for f in sorted(fields(coeffs), key=lambda f: f.name):
        h.update(f.name.encode())
        h.update(np.ascontiguousarray(
            np.asarray(getattr(coeffs, f.name), dtype=np.float64)).tobytes())
    return h.hexdigest()[:16]


def _design_config(cfg: ExperimentConfig):
    return DesignConfig(
        schools_per_stratum=tuple(cfg.schools_per_stratum),
        school_keep_prob=cfg.school_keep_prob,
    )


def _needs_fit(estimators):
    return any(e in ("MRP-I", "MRP-MI") for e in estimators)


def _replicate(rep, ss, layout, coeffs, cfg):
    """One replication: fresh individuals, one sample, full panel."""
    rng = np.random.default_rng(ss)
    seed_id = int(ss.generate_state(1, np.uint64)[0])
    subpops = [parse_subpop(expr) for expr in cfg.subpops]

    pop = assign_treatment(generate_population(layout, coeffs, rng), rng)
    sample = draw_sample(pop, _design_config(cfg), rng)
    matrix = build_poststrat_matrix(pop)

    prev = post = None
    notes = []
    if _needs_fit(cfg.estimators):
        with warnings.catch_warnings(record=True) as rec:
            warnings.simplefilter("always")
            prev = fit(prev_gpa_spec(), sample, chains=cfg.chains,
                       warmup=cfg.warmup, draws=cfg.draws_per_chain,
                       seed=int(rng.integers(2**63)))
            post = fit(post_gpa_spec(), sample, chains=cfg.chains,
                       warmup=cfg.warmup, draws=cfg.draws_per_chain,
                       seed=int(rng.integers(2**63)))
        notes = [str(w.message) for w in rec]

    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        results = estimate_all(
            sample, matrix, subpops, prev, post, rng,
            enabled=tuple(cfg.estimators), replication=rep, seed=seed_id,
        )
    notes += [str(w.message) for w in rec]

    summary = {
        "rep": rep,
        "seed": seed_id,
        "n": sample.n,
        "schools": len(sample.schools_retained),
        "response_rate": sample.response_rate,
        "treated_share": float(np.mean(sample.z == 1)),
        "notes": tuple(notes),
    }
    for tag, draws in (("prev", prev), ("post", post)):
        if draws is not None:
            rhats = [d["rhat"] for d in draws.diag.values()
                     if np.isfinite(d["rhat"])]
            summary[f"{tag}_max_rhat"] = max(rhats) if rhats else float("nan")
    return rep, results, summary


def _spawn_children(cfg):
    master = np.random.SeedSequence(cfg.master_seed)
    children = master.spawn(cfg.m_reps + 3)
    return children[0], children[1], children[2], children[3:]


def _truth(cfg, layout, coeffs, truth_ss):
    """Reference-population truth table over the configured subpops."""
    pop = generate_population(layout, coeffs, np.random.default_rng(truth_ss))
    matrix = build_poststrat_matrix(pop)
    indices = [
        subpop_index(matrix, pred, label=label)
        for label, pred in (parse_subpop(e) for e in cfg.subpops)
    ]
    return truth_table(matrix, layout, coeffs, indices, quad=cfg.quad)


def run_experiment(cfg: ExperimentConfig, out_dir=None):
    """Run the experiment and write every output file under out_dir.

    Returns a dict with the truth table, the metrics report, recorded
    failures, and the output paths.
    """
    out_dir = cfg.out_dir if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.monotonic()

    coeffs = Coefficients()
    layout_ss, truth_ss, cates_ss, rep_ss = _spawn_children(cfg)
    layout = build_strata(coeffs, cfg.scale, np.random.default_rng(layout_ss))
    table = _truth(cfg, layout, coeffs, truth_ss)

    rows = {}
    summaries = {}
    failures = []
    if cfg.n_workers > 1 and cfg.m_reps > 1:
        with ProcessPoolExecutor(max_workers=cfg.n_workers) as pool:
            futures = {
                pool.submit(_replicate, m, rep_ss[m], layout, coeffs, cfg): m
                for m in range(cfg.m_reps)
            }
            for fut in as_completed(futures):
                m = futures[fut]
                try:
                    rep, results, summary = fut.result()
                    rows[rep] = results
                    summaries[rep] = summary
                except Exception as exc:
                    seed = int(rep_ss[m].generate_state(1, np.uint64)[0])
                    failures.append({"rep": m, "seed": seed,
                                     "error": repr(exc)})
    else:
        for m in range(cfg.m_reps):
            try:
                rep, results, summary = _replicate(
                    m, rep_ss[m], layout, coeffs, cfg)
                rows[rep] = results
                summaries[rep] = summary
            except Exception as exc:
                seed = int(rep_ss[m].generate_state(1, np.uint64)[0])
                failures.append({"rep": m, "seed": seed, "error": repr(exc)})

    failures.sort(key=lambda fail: fail["rep"])
    all_results = [r for m in sorted(rows) for r in rows[m]]
    estimates_path = os.path.join(out_dir, "estimates.csv")
    write_estimates(all_results, estimates_path)

    truth_path = os.path.join(out_dir, "truth.csv")
    write_truth(table, truth_path)

    truth_by_subpop = dict(zip(table.labels, table.values))
    report = metrics_from_estimates(
        ({"estimator": r.estimator, "subpopulation": r.subpop,
          "point": r.point, "se": r.se, "lower95": r.lower95,
          "upper95": r.upper95, "skipped": r.skipped} for r in all_results),
        truth_by_subpop,
    )
    metrics_path = os.path.join(out_dir, "metrics.csv")
    write_metrics(report, metrics_path)

    cates_path = None
    if cfg.school_cates:
        cates_rows = school_cates(cfg, layout=layout, coeffs=coeffs,
                                  cates_ss=cates_ss)
        cates_path = os.path.join(out_dir, "school_cates.csv")
        write_school_cates(cates_rows, cates_path)

    lines = [
        f"backend: {BACKEND}",
        f"coefficients_hash: {coefficients_hash(coeffs)}",
        f"master_seed: {cfg.master_seed}",
        f"scale: {f17(cfg.scale)}",
        f"quadrature_nodes: {cfg.quad}",
        f"replications: {cfg.m_reps}",
        f"failures: {len(failures)}",
        f"true_ate: {f17(table.ate)}",
    ]
    for fail in failures:
        lines.append(
            f"rep {fail['rep']} seed {fail['seed']} FAILED: {fail['error']}")
    for m in sorted(summaries):
        s = summaries[m]
        parts = [
            f"rep {s['rep']} seed {s['seed']}:",
            f"n={s['n']}",
            f"schools={s['schools']}",
            f"response={s['response_rate']:.4f}",
            f"treated={s['treated_share']:.4f}",
        ]
        for tag in ("prev", "post"):
            key = f"{tag}_max_rhat"
            if key in s:
                parts.append(f"{key}={s[key]:.4f}")
        lines.append(" ".join(parts))
        for note in s["notes"]:
            lines.append(f"  note: {note}")
    lines.append(f"elapsed_seconds: {time.monotonic() - t0:.1f}")
    diagnostics_path = os.path.join(out_dir, "diagnostics.txt")
    write_diagnostics(lines, diagnostics_path)

    return {
        "estimates_path": estimates_path,
        "truth_path": truth_path,
        "metrics_path": metrics_path,
        "school_cates_path": cates_path,
        "diagnostics_path": diagnostics_path,
        "truth": table,
        "metrics": report,
        "failures": failures,
        "summaries": [summaries[m] for m in sorted(summaries)],
    }


def school_cates(cfg: ExperimentConfig, layout=None, coeffs=None,
                 cates_ss=None):
    """Per-school CATE estimates and truths from one replication.

    Every school in the layout gets a row per enabled MRP-family
    estimator, tagged by stratum and by whether the school was retained
    in the observed sample.
    """
    enabled = [e for e in cfg.estimators if e in ("MRP-I", "MRP-MI")]
    if not enabled:
        raise ValueError("school CATEs need an MRP-family estimator")
    coeffs = Coefficients() if coeffs is None else coeffs
    if layout is None or cates_ss is None:
        layout_ss, _, cates_ss, _ = _spawn_children(cfg)
        layout = build_strata(coeffs, cfg.scale,
                              np.random.default_rng(layout_ss))

    rng = np.random.default_rng(cates_ss)
    pop = assign_treatment(generate_population(layout, coeffs, rng), rng)
    sample = draw_sample(pop, _design_config(cfg), rng)
    matrix = build_poststrat_matrix(pop)

    prev = fit(prev_gpa_spec(), sample, chains=cfg.chains, warmup=cfg.warmup,
               draws=cfg.draws_per_chain, seed=int(rng.integers(2**63)))
    post = fit(post_gpa_spec(), sample, chains=cfg.chains, warmup=cfg.warmup,
               draws=cfg.draws_per_chain, seed=int(rng.integers(2**63)))

    truths = school_truths(matrix, layout, coeffs, quad=cfg.quad)
    observed = set(int(k) for k in sample.schools_retained)
    vhat = impute_vhat(prev, matrix, rng) if "MRP-I" in enabled else None

    rows = []
    bounds = np.searchsorted(matrix.school,
                             np.arange(layout.n_schools + 1))
    for k in range(layout.n_schools):
        lo, hi = bounds[k], bounds[k + 1]
        if lo == hi:
            continue
        idx = SubpopIndex(np.arange(lo, hi), f"school={k}", 0.0)
        for estimator in enabled:
            if estimator == "MRP-MI":
                r = mrp_mi(prev, post, matrix, idx, rng)
            else:
                r = mrp_i(vhat, post, matrix, idx, rng)
            rows.append({
                "school_id": k, "stratum": int(layout.stratum[k]),
                "observed": k in observed, "estimator": estimator,
                "point": r.point, "se": r.se, "lower95": r.lower95,
                "upper95": r.upper95, "truth": float(truths[k]),
            })
    return rows
