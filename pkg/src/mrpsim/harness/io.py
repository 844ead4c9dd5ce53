"""File formats for every machine-readable output.

All numeric values are printed with 17 significant digits so parsing
them back reproduces the doubles bit for bit. Categorical population
columns are integer codes; the poststratification matrix is the one
file that uses display labels, as a human-facing census table.
"""

import csv

import numpy as np

from ..coefficients import MC_LABELS, RE_LABELS, SA_LABELS
from ..design import ObservedSample
from ..dgp import FinitePopulation, StrataLayout

__all__ = [
    "read_estimates",
    "read_layout",
    "read_population",
    "read_sample",
    "read_truth",
    "write_diagnostics",
    "write_draws",
    "write_estimates",
    "write_layout",
    "write_matrix",
    "write_metrics",
    "write_population",
    "write_prior_predictive",
    "write_sample",
    "write_school_cates",
    "write_truth",
]

_G_LABELS = ("M", "F")


def f17(x):
    return "%.17g" % float(x)


def _open_writer(path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


POPULATION_COLUMNS = ("individual_id", "school_id", "stratum", "G", "RE",
                      "ME", "V", "Y0", "Y1", "Z")


def write_population(pop: FinitePopulation, path):
    fh, w = _open_writer(path)
    with fh:
        w.writerow(POPULATION_COLUMNS)
        for i in range(pop.n_p):
            w.writerow((
                i, pop.school[i], pop.stratum[i], pop.g[i], pop.re[i],
                pop.me[i], f17(pop.v[i]), f17(pop.y0[i]), f17(pop.y1[i]),
                pop.z[i],
            ))


def write_layout(layout: StrataLayout, path):
    fh, w = _open_writer(path)
    with fh:
        w.writerow(("school_id", "stratum", "size", "u", "t", "scale"))
        for k in range(layout.n_schools):
            w.writerow((
                k, layout.stratum[k], layout.size[k], f17(layout.u[k]),
                f17(layout.t[k]), f17(layout.scale),
            ))


def _read_rows(path, expected):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != expected:
        raise ValueError(f"{path}: expected header {','.join(expected)}")
    return rows[1:]


def read_layout(path) -> StrataLayout:
    rows = _read_rows(path, ("school_id", "stratum", "size", "u", "t",
                             "scale"))
    cols = list(zip(*rows))
    return StrataLayout(
        stratum=np.array(cols[1], dtype=np.int32),
        size=np.array(cols[2], dtype=np.int64),
        u=np.array(cols[3], dtype=np.float64),
        t=np.array(cols[4], dtype=np.float64),
        scale=float(rows[0][5]),
    )


def read_population(path, layout: StrataLayout) -> FinitePopulation:
    rows = _read_rows(path, POPULATION_COLUMNS)
    cols = list(zip(*rows))
    return FinitePopulation(
        layout=layout,
        school=np.array(cols[1], dtype=np.int32),
        stratum=np.array(cols[2], dtype=np.int8),
        g=np.array(cols[3], dtype=np.int8),
        re=np.array(cols[4], dtype=np.int8),
        me=np.array(cols[5], dtype=np.int8),
        v=np.array(cols[6], dtype=np.float64),
        y0=np.array(cols[7], dtype=np.float64),
        y1=np.array(cols[8], dtype=np.float64),
        z=np.array(cols[9], dtype=np.int8),
    )


SAMPLE_COLUMNS = ("individual_id", "school_id", "stratum", "G", "RE", "ME",
                  "V", "Y", "Z")


def write_sample(sample: ObservedSample, path, provenance_path, seed):
    fh, w = _open_writer(path)
    with fh:
        w.writerow(SAMPLE_COLUMNS)
        for i in range(sample.n):
            w.writerow((
                sample.pop_index[i], sample.school[i], sample.stratum[i],
                sample.g[i], sample.re[i], sample.me[i], f17(sample.v[i]),
                f17(sample.y[i]), sample.z[i],
            ))
    with open(provenance_path, "w") as fh:
        fh.write(f"seed: {seed}\n")
        fh.write(f"n: {sample.n}\n")
        fh.write(f"n_eligible: {sample.n_eligible}\n")
        fh.write(f"response_rate: {f17(sample.response_rate)}\n")
        fh.write("schools_selected: "
                 + ",".join(map(str, sample.schools_selected)) + "\n")
        fh.write("schools_retained: "
                 + ",".join(map(str, sample.schools_retained)) + "\n")


def read_sample(path, provenance_path) -> ObservedSample:
    rows = _read_rows(path, SAMPLE_COLUMNS)
    cols = list(zip(*rows))
    meta = {}
    with open(provenance_path) as fh:
        for line in fh:
            key, _, raw = line.partition(":")
            meta[key.strip()] = raw.strip()
    return ObservedSample(
        y=np.array(cols[7], dtype=np.float64),
        v=np.array(cols[6], dtype=np.float64),
        z=np.array(cols[8], dtype=np.int8),
        school=np.array(cols[1], dtype=np.int32),
        stratum=np.array(cols[2], dtype=np.int8),
        g=np.array(cols[3], dtype=np.int8),
        re=np.array(cols[4], dtype=np.int8),
        me=np.array(cols[5], dtype=np.int8),
        pop_index=np.array(cols[0], dtype=np.int64),
        schools_selected=np.array(
            meta["schools_selected"].split(","), dtype=np.int64),
        schools_retained=np.array(
            meta["schools_retained"].split(","), dtype=np.int64),
        n_eligible=int(meta["n_eligible"]),
    )


def write_matrix(matrix, path):
    """Census-table layout: one row per nonempty cell with labels."""
    fh, w = _open_writer(path)
    with fh:
        w.writerow(("Maternal Education", "Gender", "Race/Ethnicity",
                    "School", "MC", "SA", "N_c"))
        sa = matrix.sa
        mc = matrix.mc
        for c in range(matrix.j):
            w.writerow((
                bool(matrix.me[c]), _G_LABELS[matrix.g[c]],
                RE_LABELS[matrix.re[c]], matrix.school[c],
                MC_LABELS[mc[c]], SA_LABELS[sa[c]], matrix.n_c[c],
            ))


ESTIMATE_COLUMNS = ("replication", "estimator", "subpopulation", "point",
                    "se", "lower95", "upper95", "n_sample_subset", "skipped")


def write_estimates(results, path):
    """One row per EstimateResult, in the given order."""
    fh, w = _open_writer(path)
    with fh:
        w.writerow(ESTIMATE_COLUMNS)
        for r in results:
            w.writerow((
                r.replication, r.estimator, r.subpop, f17(r.point),
                f17(r.se), f17(r.lower95), f17(r.upper95), r.n_subset,
                "true" if r.skipped else "false",
            ))


def read_estimates(path):
    """List of dicts keyed by the estimates-file columns."""
    rows = _read_rows(path, ESTIMATE_COLUMNS)
    out = []
    for row in rows:
        out.append({
            "replication": int(row[0]), "estimator": row[1],
            "subpopulation": row[2], "point": float(row[3]),
            "se": float(row[4]), "lower95": float(row[5]),
            "upper95": float(row[6]), "n_sample_subset": int(row[7]),
            "skipped": row[8] == "true",
        })
    return out


TRUTH_COLUMNS = ("subpopulation", "tau")


def write_truth(table, path):
    fh, w = _open_writer(path)
    with fh:
        w.writerow(TRUTH_COLUMNS)
        for label, tau in zip(table.labels, table.values):
            w.writerow((label, f17(tau)))


def read_truth(path):
    rows = _read_rows(path, TRUTH_COLUMNS)
    return {label: float(tau) for label, tau in rows}


METRICS_COLUMNS = ("estimator", "subpopulation", "mse", "bias_sq",
                   "variance", "psr", "coverage", "n_reps", "n_skipped")


def write_metrics(report, path):
    fh, w = _open_writer(path)
    with fh:
        w.writerow(METRICS_COLUMNS)
        for r in report.rows:
            w.writerow((
                r["estimator"], r["subpopulation"], f17(r["mse"]),
                f17(r["bias_sq"]), f17(r["variance"]), f17(r["psr"]),
                f17(r["coverage"]), r["n_reps"], r["n_skipped"],
            ))


SCHOOL_CATE_COLUMNS = ("school_id", "stratum", "observed", "estimator",
                       "point", "se", "lower95", "upper95", "truth")


def write_school_cates(rows, path):
    fh, w = _open_writer(path)
    with fh:
        w.writerow(SCHOOL_CATE_COLUMNS)
        for r in rows:
            w.writerow((
                r["school_id"], r["stratum"],
                "true" if r["observed"] else "false", r["estimator"],
                f17(r["point"]), f17(r["se"]), f17(r["lower95"]),
                f17(r["upper95"]), f17(r["truth"]),
            ))


def write_draws(draws, path):
    """Flat (draw, parameter, value) listing of a posterior."""
    fh, w = _open_writer(path)
    with fh:
        w.writerow(("draw", "parameter", "value"))
        for name, values in draws.named_series():
            for j, x in enumerate(values):
                w.writerow((j, name, f17(x)))


def write_prior_predictive(draw_sets, path):
    """draw_sets: {model name: (replicates, rows) outcome array}."""
    fh, w = _open_writer(path)
    with fh:
        w.writerow(("model", "replicate", "row", "value"))
        for model, y in draw_sets.items():
            for rep in range(y.shape[0]):
                row = y[rep]
                for i in range(row.shape[0]):
                    w.writerow((model, rep, i, f17(row[i])))


def write_diagnostics(lines, path):
    with open(path, "w") as fh:
        for line in lines:
            fh.write(line.rstrip("\n") + "\n")
