"""Replication-level quality metrics.

All three metrics treat the truth as fixed and the M point estimates as
draws from the estimator's sampling distribution. The MSE decomposition
mse = bias^2 + variance is kept exact by computing all three terms from
the same sums.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MetricsReport",
    "compute_coverage",
    "compute_mse",
    "compute_psr",
]


def compute_mse(points, truth):
    """dict(mse, bias_sq, variance) with mse = bias_sq + variance exact."""
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        raise ValueError("no points")
    mean = points.mean()
    bias_sq = (mean - truth) ** 2
    variance = float(np.mean((points - mean) ** 2))
    return {"mse": bias_sq + variance, "bias_sq": bias_sq,
            "variance": variance}


def compute_psr(points, ses, truth):
    """Mean scaled log predictive density of the truth, up to the
    constant: -(1/M) sum ((truth-point)/se)^2 - (1/M) sum log(se^2)."""
    points = np.asarray(points, dtype=np.float64)
    ses = np.asarray(ses, dtype=np.float64)
    if points.size == 0:
        raise ValueError("no points")
    if points.shape != ses.shape:
        raise ValueError("points and ses must align")
    if np.any(ses <= 0):
        raise ValueError("standard errors must be positive")
    z = (truth - points) / ses
    return float(-np.mean(z * z) - np.mean(np.log(ses * ses)))


def compute_coverage(intervals, truth):
    """Fraction of closed [lower, upper] pairs containing truth."""
    intervals = np.asarray(intervals, dtype=np.float64)
    if intervals.size == 0:
        raise ValueError("no intervals")
    if intervals.ndim != 2 or intervals.shape[1] != 2:
        raise ValueError("expected an (M, 2) array of interval bounds")
    lower, upper = intervals[:, 0], intervals[:, 1]
    if np.any(lower > upper):
        i = int(np.argmax(lower > upper))
        raise ValueError(f"interval {i} has lower > upper")
    return float(np.mean((lower <= truth) & (truth <= upper)))


@dataclass(frozen=True)
class MetricsReport:
    """One row per (estimator, subpopulation) with replication counts."""

    rows: tuple

    def row(self, estimator, subpop):
        for r in self.rows:
            if r["estimator"] == estimator and r["subpopulation"] == subpop:
                return r
        raise KeyError((estimator, subpop))


def metrics_from_estimates(estimates, truth_by_subpop):
    """Aggregate EstimateResult-like rows into a MetricsReport.

    `estimates` yields mappings with the estimates-file columns; skipped
    rows are excluded per cell and the usable count reported.
    """
    groups = {}
    for r in estimates:
        groups.setdefault((r["estimator"], r["subpopulation"]), []).append(r)
    rows = []
    for (estimator, subpop), rs in groups.items():
        truth = truth_by_subpop[subpop]
        used = [r for r in rs if not r["skipped"]]
        row = {"estimator": estimator, "subpopulation": subpop,
               "n_reps": len(used), "n_skipped": len(rs) - len(used)}
        if used:
            points = [r["point"] for r in used]
            row.update(compute_mse(points, truth))
            row["psr"] = compute_psr(points, [r["se"] for r in used], truth)
            row["coverage"] = compute_coverage(
                [(r["lower95"], r["upper95"]) for r in used], truth)
        else:
            row.update(mse=float("nan"), bias_sq=float("nan"),
                       variance=float("nan"), psr=float("nan"),
                       coverage=float("nan"))
        rows.append(row)
    return MetricsReport(rows=tuple(rows))
