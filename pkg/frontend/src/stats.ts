/**
 * Small numeric helpers for the figure builders. Everything here is
 * deterministic: fixed grids, closed-form bandwidths, no RNG.
 */

export interface BoxStats {
  median: number;
  q1: number;
  q3: number;
  loWhisker: number;
  hiWhisker: number;
  outliers: number[];
}

/** Linear-interpolation quantile on a sorted array (numpy default). */
export function quantile(sorted: number[], q: number): number {
  const n = sorted.length;
  if (n === 0) throw new Error("quantile of empty array");
  const pos = q * (n - 1);
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  const a = sorted[lo]!;
  const b = sorted[hi]!;
  return a + (b - a) * (pos - lo);
}

/** Five-number box summary with 1.5 IQR whiskers clamped to the data. */
export function boxStats(values: number[]): BoxStats {
  const sorted = [...values].sort((a, b) => a - b);
  const q1 = quantile(sorted, 0.25);
  const median = quantile(sorted, 0.5);
  const q3 = quantile(sorted, 0.75);
  const iqr = q3 - q1;
  const loLimit = q1 - 1.5 * iqr;
  const hiLimit = q3 + 1.5 * iqr;
  const inside = sorted.filter((v) => v >= loLimit && v <= hiLimit);
  return {
    median,
    q1,
    q3,
    loWhisker: inside[0] ?? q1,
    hiWhisker: inside[inside.length - 1] ?? q3,
    outliers: sorted.filter((v) => v < loLimit || v > hiLimit),
  };
}

/** Gaussian kernel density on a fixed grid, Silverman bandwidth. */
export function kde(values: number[], lo: number, hi: number,
  points = 200): { x: number[]; y: number[] } {
  const n = values.length;
  if (n === 0) throw new Error("kde of empty array");
  const mean = values.reduce((s, v) => s + v, 0) / n;
  const sd = Math.sqrt(values.reduce((s, v) => s + (v - mean) ** 2, 0)
    / Math.max(1, n - 1));
  const sorted = [...values].sort((a, b) => a - b);
  const iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  const spread = Math.min(sd || 1e-3, iqr / 1.349 || sd || 1e-3);
  const h = Math.max(1.06 * spread * Math.pow(n, -0.2), 1e-3);
  const x: number[] = [];
  const y: number[] = [];
  for (let i = 0; i < points; i++) {
    const g = lo + ((hi - lo) * i) / (points - 1);
    let acc = 0;
    for (const v of values) {
      const z = (g - v) / h;
      acc += Math.exp(-0.5 * z * z);
    }
    x.push(g);
    y.push(acc / (n * h * Math.sqrt(2 * Math.PI)));
  }
  return { x, y };
}

/** Round-numbered axis ticks covering [lo, hi] with ~count steps. */
export function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.1 : 0.5;
    return niceTicks(lo - pad, hi + pad, count);
  }
  const rawStep = (hi - lo) / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const m of [1, 2, 2.5, 5, 10]) {
    if (m * mag >= rawStep) {
      step = m * mag;
      break;
    }
  }
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let t = start; t <= hi + step * 1e-9; t += step) {
    ticks.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  return ticks;
}

/** Fixed-notation label with just enough decimals for the tick step. */
export function tickLabel(value: number, step: number): string {
  let decimals = 0;
  while (decimals < 6) {
    const scaled = step * 10 ** decimals;
    if (Math.abs(scaled - Math.round(scaled)) < 1e-9 * Math.max(1, scaled)) break;
    decimals += 1;
  }
  return value.toFixed(decimals);
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return [lo, hi];
}
