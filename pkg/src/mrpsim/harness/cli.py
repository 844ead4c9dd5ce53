"""Command-line entry point.

Subcommands cover the pipeline stages individually (generate, sample,
fit, estimate) and end to end (simulate, report). Files live under
--out-dir with fixed names, so stages can be chained:

    mrpsim generate --seed 7 --scale 0.05 --out-dir out
    mrpsim sample --seed 7 --scale 0.05 --out-dir out
    mrpsim fit --seed 7 --out-dir out
    mrpsim simulate --seed 7 --reps 20 --out-dir out
    mrpsim report --out-dir out
"""

import argparse
import os

import numpy as np

from ..bayes import fit as fit_model
from ..bayes import post_gpa_spec, prev_gpa_spec, prior_predictive
from ..bayes.model import model_data_from_sample
from ..coefficients import Coefficients
from ..dgp import assign_treatment, build_strata, generate_population
from ..design import draw_sample
from ..kernels import BACKEND
from ..poststrat import build_poststrat_matrix
from .config import ExperimentConfig, load_config
from .io import (
    read_estimates,
    read_layout,
    read_population,
    read_sample,
    read_truth,
    write_diagnostics,
    write_draws,
    write_estimates,
    write_layout,
    write_matrix,
    write_metrics,
    write_population,
    write_prior_predictive,
    write_sample,
)
from .metrics import metrics_from_estimates
from .runner import _design_config, _replicate, _spawn_children, run_experiment

__all__ = ["main"]


def _add_common(p):
    p.add_argument("--config", help="key = value file with config fields")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--scale", type=float, help="population scale in (0, 1]")
    p.add_argument("--reps", type=int, help="number of replications")
    p.add_argument("--out-dir", help="directory for all outputs")


def _config(args):
    overrides = {
        "master_seed": args.seed,
        "scale": args.scale,
        "m_reps": args.reps,
        "out_dir": args.out_dir,
    }
    if args.config:
        return load_config(args.config, **overrides)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return ExperimentConfig(**overrides)


def _stage_seeds(cfg):
    """Independent streams for the file-based generate/sample/fit chain."""
    _, _, _, rep_ss = _spawn_children(cfg)
    return rep_ss[0].spawn(3)


def _cmd_generate(args):
    cfg = _config(args)
    os.makedirs(cfg.out_dir, exist_ok=True)
    coeffs = Coefficients()
    layout_ss, _, _, _ = _spawn_children(cfg)
    layout = build_strata(coeffs, cfg.scale, np.random.default_rng(layout_ss))
    rng = np.random.default_rng(_stage_seeds(cfg)[0])
    pop = assign_treatment(generate_population(layout, coeffs, rng), rng)
    write_layout(layout, os.path.join(cfg.out_dir, "layout.csv"))
    write_population(pop, os.path.join(cfg.out_dir, "population.csv"))
    write_matrix(build_poststrat_matrix(pop),
                 os.path.join(cfg.out_dir, "poststrat.csv"))
    print(f"wrote population of {pop.n_p} individuals in "
          f"{layout.n_schools} schools to {cfg.out_dir}")


def _cmd_sample(args):
    cfg = _config(args)
    layout = read_layout(os.path.join(cfg.out_dir, "layout.csv"))
    pop = read_population(os.path.join(cfg.out_dir, "population.csv"), layout)
    rng = np.random.default_rng(_stage_seeds(cfg)[1])
    sample = draw_sample(pop, _design_config(cfg), rng)
    write_sample(sample, os.path.join(cfg.out_dir, "sample.csv"),
                 os.path.join(cfg.out_dir, "sample_provenance.txt"),
                 cfg.master_seed)
    print(f"wrote sample of {sample.n} students from "
          f"{len(sample.schools_retained)} schools "
          f"(response rate {sample.response_rate:.3f})")


def _cmd_fit(args):
    cfg = _config(args)
    sample = read_sample(os.path.join(cfg.out_dir, "sample.csv"),
                         os.path.join(cfg.out_dir, "sample_provenance.txt"))
    rng = np.random.default_rng(_stage_seeds(cfg)[2])
    if args.prior_predictive:
        sets = {}
        for tag, spec in (("prev_gpa", prev_gpa_spec()),
                          ("post_gpa", post_gpa_spec())):
            data = model_data_from_sample(spec, sample)
            sets[tag] = prior_predictive(spec, data, args.prior_predictive,
                                         rng)
        path = os.path.join(cfg.out_dir, "prior_predictive.csv")
        write_prior_predictive(sets, path)
        print(f"wrote {args.prior_predictive} prior replicates per model "
              f"to {path}")
        return
    lines = [f"backend: {BACKEND}"]
    for tag, spec in (("prev", prev_gpa_spec()), ("post", post_gpa_spec())):
        draws = fit_model(spec, sample, chains=cfg.chains, warmup=cfg.warmup,
                          draws=cfg.draws_per_chain,
                          seed=int(rng.integers(2**63)))
        write_draws(draws, os.path.join(cfg.out_dir, f"{tag}_draws.csv"))
        lines.append(f"[{tag}] draws: {draws.s}")
        if draws.convergence_warning:
            lines.append(f"[{tag}] WARNING: {draws.convergence_warning}")
        for name, d in draws.diag.items():
            lines.append(f"[{tag}] {name}: rhat={d['rhat']:.4f} "
                         f"ess={d['ess']:.0f}")
    write_diagnostics(lines, os.path.join(cfg.out_dir, "diagnostics.txt"))
    print(f"wrote posterior draws and diagnostics to {cfg.out_dir}")


def _cmd_estimate(args):
    cfg = _config(args)
    os.makedirs(cfg.out_dir, exist_ok=True)
    coeffs = Coefficients()
    layout_ss, _, _, rep_ss = _spawn_children(cfg)
    layout = build_strata(coeffs, cfg.scale, np.random.default_rng(layout_ss))
    _, results, summary = _replicate(0, rep_ss[0], layout, coeffs, cfg)
    path = os.path.join(cfg.out_dir, "estimates.csv")
    write_estimates(results, path)
    print(f"wrote {len(results)} estimate rows to {path} "
          f"(n={summary['n']}, schools={summary['schools']})")


def _cmd_simulate(args):
    cfg = _config(args)
    out = run_experiment(cfg)
    print(f"true ATE: {out['truth'].ate:.6f}")
    print(f"failures: {len(out['failures'])}")
    for key in ("estimates_path", "truth_path", "metrics_path",
                "school_cates_path", "diagnostics_path"):
        if out[key]:
            print(f"wrote {out[key]}")


def _cmd_report(args):
    cfg = _config(args)
    estimates = read_estimates(os.path.join(cfg.out_dir, "estimates.csv"))
    truth = read_truth(os.path.join(cfg.out_dir, "truth.csv"))
    report = metrics_from_estimates(estimates, truth)
    path = os.path.join(cfg.out_dir, "metrics.csv")
    write_metrics(report, path)
    for r in sorted(report.rows,
                    key=lambda r: (r["subpopulation"], r["estimator"])):
        print(f"{r['subpopulation']:>40} {r['estimator']:>6} "
              f"mse={r['mse']:.3e} psr={r['psr']:.3f} "
              f"coverage={r['coverage']:.2f} reps={r['n_reps']}")
    print(f"wrote {path}")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="mrpsim",
        description="finite-population simulation of poststratified "
                    "treatment-effect estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "generate": _cmd_generate,
        "sample": _cmd_sample,
        "fit": _cmd_fit,
        "estimate": _cmd_estimate,
        "simulate": _cmd_simulate,
        "report": _cmd_report,
    }
    helps = {
        "generate": "draw a finite population and write it out",
        "sample": "draw the observed survey from a stored population",
        "fit": "fit both multilevel models to a stored sample",
        "estimate": "run a single replication end to end",
        "simulate": "run the full replication study",
        "report": "aggregate stored estimates against stored truth",
    }
    for name, handler in handlers.items():
        p = sub.add_parser(name, help=helps[name])
        _add_common(p)
        if name == "fit":
            p.add_argument("--prior-predictive", type=int, metavar="N",
                           help="write N prior replicates instead of fitting")
        p.set_defaults(handler=handler)
    args = parser.parse_args(argv)
    args.handler(args)


if __name__ == "__main__":
    main()
