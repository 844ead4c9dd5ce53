/**
 * Figure builders. Each returns a complete SVG document string from
 * already-parsed CSV rows; nothing here touches the filesystem.
 */

import type { EstimateRow, PriorPredictiveRow, SampleRow, SchoolCateRow } from "./csv.js";
import { boxStats, extent, kde, niceTicks, tickLabel } from "./stats.js";
import { linearScale, Svg, yAxis } from "./svg.js";

const ESTIMATOR_ORDER = ["OLS", "SVY", "MRP-I", "MRP-MI"];
const BOX_FILL = "#9ecae9";
const TRUTH_RED = "#d62728";

// ---------------------------------------------------------------------------
// Estimate boxplot panels (one panel per subpopulation, truth line in red)
// ---------------------------------------------------------------------------

interface Panel {
  subpop: string;
  truth: number;
  byEstimator: Map<string, number[]>;
  nSubset: number;
  sampleShare: number;
}

function buildPanels(rows: EstimateRow[], truth: Map<string, number>,
  wanted: (subpop: string) => boolean): Panel[] {
  const kept = rows.filter((r) => !r.skipped && wanted(r.subpopulation));
  const subpops = [...new Set(kept.map((r) => r.subpopulation))];
  // full-sample size per replication, for the share annotation
  const fullBySubpop = new Map<string, number>();
  for (const r of rows) {
    if (!r.skipped) {
      fullBySubpop.set(r.subpopulation,
        Math.max(fullBySubpop.get(r.subpopulation) ?? 0, r.nSubset));
    }
  }
  const fullN = Math.max(...[...fullBySubpop.values()], 1);
  return subpops.map((sp) => {
    const t = truth.get(sp);
    if (t === undefined) {
      throw new Error(`subpopulation ${sp} missing from the truth table`);
    }
    const byEstimator = new Map<string, number[]>();
    for (const r of kept) {
      if (r.subpopulation !== sp) continue;
      const arr = byEstimator.get(r.estimator) ?? [];
      arr.push(r.point);
      byEstimator.set(r.estimator, arr);
    }
    const n = fullBySubpop.get(sp) ?? 0;
    return {
      subpop: sp,
      truth: t,
      byEstimator,
      nSubset: n,
      sampleShare: n / fullN,
    };
  });
}

function estimateFigure(rows: EstimateRow[], truth: Map<string, number>,
  wanted: (subpop: string) => boolean, title: string): string {
  const panels = buildPanels(rows, truth, wanted);
  if (panels.length === 0) {
    throw new Error("no subpopulations match this figure");
  }
  const estimators = ESTIMATOR_ORDER.filter(
    (e) => panels.some((p) => p.byEstimator.has(e)));

  const panelW = Math.max(150, 52 * estimators.length + 40);
  const panelH = 230;
  const left = 64;
  const top = 46;
  const gap = 18;
  const width = left + panels.length * (panelW + gap) + 10;
  const height = top + panelH + 74;
  const svg = new Svg(width, height);
  svg.text(width / 2, 22, title, 14);

  const allPoints = panels.flatMap((p) => [...p.byEstimator.values()].flat());
  const [rawLo, rawHi] = extent([...allPoints, ...panels.map((p) => p.truth)]);
  const pad = (rawHi - rawLo || 0.1) * 0.08;
  const yScale = linearScale([rawLo - pad, rawHi + pad],
    [top + panelH, top]);
  const ticks = niceTicks(rawLo - pad, rawHi + pad, 6);
  const step = ticks.length > 1 ? ticks[1]! - ticks[0]! : 1;
  yAxis(svg, yScale, left - 8, ticks, step, tickLabel, "point estimate");

  panels.forEach((panel, pi) => {
    const x0 = left + pi * (panelW + gap);
    svg.rect(x0, top, panelW, panelH, "none", "#bbbbbb");
    const ty = yScale(panel.truth);
    svg.line(x0, ty, x0 + panelW, ty, TRUTH_RED, 1.4);
    estimators.forEach((est, ei) => {
      const pts = panel.byEstimator.get(est);
      const cx = x0 + ((ei + 0.5) * panelW) / estimators.length;
      if (pts && pts.length) {
        const b = boxStats(pts);
        const bw = Math.min(34, panelW / estimators.length - 14);
        svg.line(cx, yScale(b.loWhisker), cx, yScale(b.q1), "#444444");
        svg.line(cx, yScale(b.q3), cx, yScale(b.hiWhisker), "#444444");
        svg.line(cx - bw / 4, yScale(b.loWhisker), cx + bw / 4,
          yScale(b.loWhisker), "#444444");
        svg.line(cx - bw / 4, yScale(b.hiWhisker), cx + bw / 4,
          yScale(b.hiWhisker), "#444444");
        svg.rect(cx - bw / 2, yScale(b.q3), bw,
          Math.max(0.5, yScale(b.q1) - yScale(b.q3)), BOX_FILL, "#346b8e");
        svg.line(cx - bw / 2, yScale(b.median), cx + bw / 2,
          yScale(b.median), "#11334a", 1.6);
        for (const o of b.outliers) {
          svg.circle(cx, yScale(o), 2, "#444444");
        }
      }
      svg.text(cx, top + panelH + 14, est, 10);
    });
    svg.text(x0 + panelW / 2, top + panelH + 32, panel.subpop, 11);
    svg.text(x0 + panelW / 2, top + panelH + 48,
      `${(panel.sampleShare * 100).toFixed(1)}% of sample, n≈${panel.nSubset}`,
      10, "middle", "#555555");
  });
  svg.text(left + 4, top - 8, "red line: true effect", 10, "start", TRUTH_RED);
  return svg.render();
}

/** Aggregate panels: the subpopulations carved out by at most one clause. */
export function fig3(rows: EstimateRow[], truth: Map<string, number>): string {
  return estimateFigure(rows, truth,
    (sp) => sp.split("&").length <= 2,
    "Point estimates by estimator: aggregate panels");
}

/** Small-slice panels: subpopulations carved out by three or more clauses. */
export function fig4(rows: EstimateRow[], truth: Map<string, number>): string {
  return estimateFigure(rows, truth,
    (sp) => sp.split("&").length > 2,
    "Point estimates by estimator: small subpopulations");
}

// ---------------------------------------------------------------------------
// School effect scatter with a residual histogram strip
// ---------------------------------------------------------------------------

export function fig5(rows: SchoolCateRow[]): string {
  const mi = rows.filter((r) => r.estimator === "MRP-MI");
  if (mi.length === 0) {
    throw new Error("no MRP-MI rows in the school effects file");
  }
  const width = 560;
  const height = 470;
  const left = 64;
  const top = 40;
  const plotW = 440;
  const plotH = 300;
  const svg = new Svg(width, height);
  svg.text(width / 2, 22, "School treatment effects: estimate vs truth", 14);

  const [tLo, tHi] = extent(mi.map((r) => r.truth));
  const [pLo, pHi] = extent(mi.map((r) => r.point));
  const lo = Math.min(tLo, pLo);
  const hi = Math.max(tHi, pHi);
  const pad = (hi - lo || 0.1) * 0.08;
  const xScale = linearScale([lo - pad, hi + pad], [left, left + plotW]);
  const yScale = linearScale([lo - pad, hi + pad], [top + plotH, top]);

  const ticks = niceTicks(lo - pad, hi + pad, 6);
  const step = ticks.length > 1 ? ticks[1]! - ticks[0]! : 1;
  yAxis(svg, yScale, left - 8, ticks, step, tickLabel, "estimated effect");
  svg.line(left, top + plotH + 8, left + plotW, top + plotH + 8, "#222222");
  for (const t of ticks) {
    const x = xScale(t);
    svg.line(x, top + plotH + 8, x, top + plotH + 12, "#222222");
    svg.text(x, top + plotH + 24, tickLabel(t, step), 10);
  }
  svg.text(left + plotW / 2, top + plotH + 40, "true effect", 11);

  svg.line(xScale(lo - pad), yScale(lo - pad), xScale(hi + pad),
    yScale(hi + pad), "#999999", 1, "4,3");
  for (const r of mi) {
    if (r.observed) {
      svg.circle(xScale(r.truth), yScale(r.point), 2.4, "#1f77b4");
    } else {
      svg.circle(xScale(r.truth), yScale(r.point), 2.4, "#ff7f0e", "#ff7f0e");
    }
  }
  svg.circle(left + plotW - 150, top + 12, 3, "#1f77b4");
  svg.text(left + plotW - 142, top + 16, "sampled school", 10, "start");
  svg.circle(left + plotW - 150, top + 28, 3, "#ff7f0e", "#ff7f0e");
  svg.text(left + plotW - 142, top + 32, "unsampled school", 10, "start");

  // residual strip under the scatter
  const resid = mi.map((r) => r.point - r.truth);
  const [rLo, rHi] = extent(resid);
  const rPad = (rHi - rLo || 0.1) * 0.1;
  const bins = 30;
  const counts = new Array<number>(bins).fill(0);
  const binW = (rHi - rLo + 2 * rPad) / bins;
  for (const r of resid) {
    const b = Math.min(bins - 1, Math.floor((r - rLo + rPad) / binW));
    counts[b]! += 1;
  }
  const hTop = top + plotH + 58;
  const hH = 70;
  const hScale = linearScale([0, Math.max(...counts)], [hTop + hH, hTop]);
  const hx = linearScale([rLo - rPad, rHi + rPad], [left, left + plotW]);
  counts.forEach((c, b) => {
    const x = hx(rLo - rPad + b * binW);
    const w = hx(rLo - rPad + (b + 1) * binW) - x;
    svg.rect(x, hScale(c), Math.max(0.5, w - 0.6), hScale(0) - hScale(c),
      "#bbd5ea", "#346b8e");
  });
  svg.line(hx(0), hTop + hH, hx(0), hTop, TRUTH_RED, 1, "3,3");
  svg.text(left + plotW / 2, hTop + hH + 16, "estimate - truth", 10);
  return svg.render();
}

// ---------------------------------------------------------------------------
// Prior predictive overlays
// ---------------------------------------------------------------------------

const MODEL_OBSERVED: Record<string, keyof SampleRow> = {
  prev_gpa: "v",
  post_gpa: "y",
};

export function fig2(prior: PriorPredictiveRow[], sample: SampleRow[]): string {
  const preferred = Object.keys(MODEL_OBSERVED);
  const models = [...new Set(prior.map((r) => r.model))].sort((a, b) => {
    const ia = preferred.indexOf(a);
    const ib = preferred.indexOf(b);
    return (ia === -1 ? preferred.length : ia) - (ib === -1 ? preferred.length : ib)
      || a.localeCompare(b);
  });
  if (models.length === 0) throw new Error("no prior predictive rows");
  const lo = 0;
  const hi = 4.33;
  const panelW = 320;
  const panelH = 220;
  const left = 58;
  const top = 44;
  const gap = 26;
  const width = left + models.length * (panelW + gap) + 6;
  const height = top + panelH + 56;
  const svg = new Svg(width, height);
  svg.text(width / 2, 22,
    "Prior predictive replicates (grey) vs observed sample (dark)", 13);

  models.forEach((model, mi) => {
    const x0 = left + mi * (panelW + gap);
    const rows = prior.filter((r) => r.model === model);
    const reps = [...new Set(rows.map((r) => r.replicate))].sort((a, b) => a - b);
    const curves = reps.map((rep) =>
      kde(rows.filter((r) => r.replicate === rep).map((r) => r.value), lo, hi));
    const key = MODEL_OBSERVED[model];
    if (key === undefined) {
      throw new Error(`unknown model in prior predictive file: ${model}`);
    }
    const observed = kde(sample.map((s) => s[key]), lo, hi);
    const yMax = Math.max(...observed.y, ...curves.flatMap((c) => c.y));
    const xScale = linearScale([lo, hi], [x0, x0 + panelW]);
    const yScale = linearScale([0, yMax * 1.05], [top + panelH, top]);

    svg.rect(x0, top, panelW, panelH, "none", "#bbbbbb");
    for (const c of curves) {
      svg.polyline(c.x.map((v, i) => [xScale(v), yScale(c.y[i]!)]),
        "#999999", 0.8, 0.55);
    }
    svg.polyline(observed.x.map((v, i) => [xScale(v), yScale(observed.y[i]!)]),
      "#11334a", 1.8);
    const ticks = niceTicks(lo, hi, 5);
    const step = ticks.length > 1 ? ticks[1]! - ticks[0]! : 1;
    for (const t of ticks) {
      const x = xScale(t);
      svg.line(x, top + panelH, x, top + panelH + 4, "#222222");
      svg.text(x, top + panelH + 16, tickLabel(t, step), 10);
    }
    svg.text(x0 + panelW / 2, top + panelH + 34, `${model} outcome`, 11);
  });
  return svg.render();
}
