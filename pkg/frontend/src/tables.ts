/**
 * Markdown metrics tables. Metric values are passed through verbatim from
 * the CSV text; the only transformation is bolding the best value per
 * column within each subpopulation block.
 */

import type { MetricsRow } from "./csv.js";

const ESTIMATOR_ORDER = ["OLS", "SVY", "MRP-I", "MRP-MI"];

type MetricKey = "mse" | "biasSq" | "variance" | "psr" | "coverage";

const COLUMNS: { key: MetricKey; header: string }[] = [
  { key: "mse", header: "MSE" },
  { key: "biasSq", header: "Bias²" },
  { key: "variance", header: "Variance" },
  { key: "psr", header: "PSR" },
  { key: "coverage", header: "Coverage" },
];

function bestIndex(rows: MetricsRow[], key: MetricKey): number {
  let best = -1;
  let bestScore = Infinity;
  rows.forEach((r, i) => {
    const v = r[key];
    if (!Number.isFinite(v)) return;
    // lower is better for error metrics, higher for psr,
    // and coverage is judged by distance from the nominal 95%
    const score = key === "psr" ? -v
      : key === "coverage" ? Math.abs(v - 0.95)
        : v;
    if (score < bestScore) {
      bestScore = score;
      best = i;
    }
  });
  return best;
}

function orderRows(rows: MetricsRow[]): MetricsRow[] {
  return [...rows].sort((a, b) => {
    const ia = ESTIMATOR_ORDER.indexOf(a.estimator);
    const ib = ESTIMATOR_ORDER.indexOf(b.estimator);
    const ka = ia === -1 ? ESTIMATOR_ORDER.length : ia;
    const kb = ib === -1 ? ESTIMATOR_ORDER.length : ib;
    return ka - kb || a.estimator.localeCompare(b.estimator);
  });
}

export function metricsTable(rows: MetricsRow[]): string {
  if (rows.length === 0) throw new Error("no metrics rows");
  const subpops: string[] = [];
  for (const r of rows) {
    if (!subpops.includes(r.subpopulation)) subpops.push(r.subpopulation);
  }
  const out: string[] = ["# Estimator comparison", ""];
  for (const sp of subpops) {
    const block = orderRows(rows.filter((r) => r.subpopulation === sp));
    out.push(`## ${sp}`, "");
    out.push(`| Estimator | ${COLUMNS.map((c) => c.header).join(" | ")} | Reps | Skipped |`);
    out.push(`|---|${COLUMNS.map(() => "---:").join("|")}|---:|---:|`);
    const best = new Map<MetricKey, number>(
      COLUMNS.map((c) => [c.key, bestIndex(block, c.key)]));
    block.forEach((r, i) => {
      const cells = COLUMNS.map((c) => {
        const raw = r.raw[c.key];
        return best.get(c.key) === i ? `**${raw}**` : raw;
      });
      out.push(`| ${r.estimator} | ${cells.join(" | ")} | ${r.nReps} | ${r.nSkipped} |`);
    });
    out.push("");
  }
  return out.join("\n");
}
