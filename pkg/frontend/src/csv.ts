/**
 * Typed readers for the harness CSV outputs.
 *
 * Every reader validates the header and each row against the documented
 * schema and throws SchemaError with the offending file and line number.
 * Numeric fields accept "nan"/"inf" spellings only where the writer can
 * legitimately produce them (skipped estimate rows, empty metric cells).
 */

// ---------------------------------------------------------------------------
// Row types
// ---------------------------------------------------------------------------

export interface EstimateRow {
  replication: number;
  estimator: string;
  subpopulation: string;
  point: number;
  se: number;
  lower95: number;
  upper95: number;
  nSubset: number;
  skipped: boolean;
}

export interface MetricsRow {
  estimator: string;
  subpopulation: string;
  mse: number;
  biasSq: number;
  variance: number;
  psr: number;
  coverage: number;
  nReps: number;
  nSkipped: number;
  /** raw column text, preserved so tables can pass values through verbatim */
  raw: { mse: string; biasSq: string; variance: string; psr: string; coverage: string };
}

export interface SchoolCateRow {
  schoolId: number;
  stratum: number;
  observed: boolean;
  estimator: string;
  point: number;
  se: number;
  lower95: number;
  upper95: number;
  truth: number;
}

export interface PriorPredictiveRow {
  model: string;
  replicate: number;
  row: number;
  value: number;
}

export interface SampleRow {
  v: number;
  y: number;
}

export class SchemaError extends Error {
  constructor(file: string, line: number, message: string) {
    super(`${file}:${line}: ${message}`);
    this.name = "SchemaError";
  }
}

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

const HEADERS = {
  estimates: ["replication", "estimator", "subpopulation", "point", "se",
    "lower95", "upper95", "n_sample_subset", "skipped"],
  truth: ["subpopulation", "tau"],
  metrics: ["estimator", "subpopulation", "mse", "bias_sq", "variance",
    "psr", "coverage", "n_reps", "n_skipped"],
  schoolCates: ["school_id", "stratum", "observed", "estimator", "point",
    "se", "lower95", "upper95", "truth"],
  priorPredictive: ["model", "replicate", "row", "value"],
  sample: ["individual_id", "school_id", "stratum", "G", "RE", "ME",
    "V", "Y", "Z"],
} as const;

function rows(file: string, text: string, header: readonly string[]): string[][] {
  const lines = text.split("\n");
  while (lines.length && lines[lines.length - 1] === "") lines.pop();
  if (lines.length === 0) {
    throw new SchemaError(file, 1, "empty file");
  }
  const got = (lines[0] ?? "").replace(/\r$/, "").split(",");
  if (got.length !== header.length || got.some((h, i) => h !== header[i])) {
    throw new SchemaError(file, 1,
      `expected header ${header.join(",")}, got ${got.join(",")}`);
  }
  const out: string[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const fields = (lines[i] ?? "").replace(/\r$/, "").split(",");
    if (fields.length !== header.length) {
      throw new SchemaError(file, i + 1,
        `expected ${header.length} fields, got ${fields.length}`);
    }
    out.push(fields);
  }
  if (out.length === 0) {
    throw new SchemaError(file, 1, "no data rows");
  }
  return out;
}

function num(file: string, line: number, name: string, text: string,
  allowNonFinite = false): number {
  const v = Number(text);
  if (Number.isNaN(v) && text.trim().toLowerCase() !== "nan") {
    throw new SchemaError(file, line, `field ${name}: not a number: ${text}`);
  }
  if (!Number.isFinite(v) && !allowNonFinite) {
    throw new SchemaError(file, line, `field ${name}: not finite: ${text}`);
  }
  return v;
}

function int(file: string, line: number, name: string, text: string): number {
  const v = num(file, line, name, text);
  if (!Number.isInteger(v)) {
    throw new SchemaError(file, line, `field ${name}: not an integer: ${text}`);
  }
  return v;
}

function bool(file: string, line: number, name: string, text: string): boolean {
  if (text !== "true" && text !== "false") {
    throw new SchemaError(file, line, `field ${name}: expected true/false, got ${text}`);
  }
  return text === "true";
}

// ---------------------------------------------------------------------------
// Readers
// ---------------------------------------------------------------------------

export function parseEstimates(file: string, text: string): EstimateRow[] {
  return rows(file, text, HEADERS.estimates).map((f, i) => {
    const line = i + 2;
    const skipped = bool(file, line, "skipped", f[8]!);
    const row: EstimateRow = {
      replication: int(file, line, "replication", f[0]!),
      estimator: f[1]!,
      subpopulation: f[2]!,
      point: num(file, line, "point", f[3]!, skipped),
      se: num(file, line, "se", f[4]!, skipped),
      lower95: num(file, line, "lower95", f[5]!, skipped),
      upper95: num(file, line, "upper95", f[6]!, skipped),
      nSubset: int(file, line, "n_sample_subset", f[7]!),
      skipped,
    };
    return row;
  });
}

export function parseTruth(file: string, text: string): Map<string, number> {
  const out = new Map<string, number>();
  rows(file, text, HEADERS.truth).forEach((f, i) => {
    out.set(f[0]!, num(file, i + 2, "tau", f[1]!));
  });
  return out;
}

export function parseMetrics(file: string, text: string): MetricsRow[] {
  return rows(file, text, HEADERS.metrics).map((f, i) => {
    const line = i + 2;
    return {
      estimator: f[0]!,
      subpopulation: f[1]!,
      mse: num(file, line, "mse", f[2]!, true),
      biasSq: num(file, line, "bias_sq", f[3]!, true),
      variance: num(file, line, "variance", f[4]!, true),
      psr: num(file, line, "psr", f[5]!, true),
      coverage: num(file, line, "coverage", f[6]!, true),
      nReps: int(file, line, "n_reps", f[7]!),
      nSkipped: int(file, line, "n_skipped", f[8]!),
      raw: { mse: f[2]!, biasSq: f[3]!, variance: f[4]!, psr: f[5]!, coverage: f[6]! },
    };
  });
}

export function parseSchoolCates(file: string, text: string): SchoolCateRow[] {
  return rows(file, text, HEADERS.schoolCates).map((f, i) => {
    const line = i + 2;
    return {
      schoolId: int(file, line, "school_id", f[0]!),
      stratum: int(file, line, "stratum", f[1]!),
      observed: bool(file, line, "observed", f[2]!),
      estimator: f[3]!,
      point: num(file, line, "point", f[4]!),
      se: num(file, line, "se", f[5]!),
      lower95: num(file, line, "lower95", f[6]!),
      upper95: num(file, line, "upper95", f[7]!),
      truth: num(file, line, "truth", f[8]!),
    };
  });
}

export function parsePriorPredictive(file: string, text: string): PriorPredictiveRow[] {
  return rows(file, text, HEADERS.priorPredictive).map((f, i) => {
    const line = i + 2;
    return {
      model: f[0]!,
      replicate: int(file, line, "replicate", f[1]!),
      row: int(file, line, "row", f[2]!),
      value: num(file, line, "value", f[3]!),
    };
  });
}

export function parseSample(file: string, text: string): SampleRow[] {
  return rows(file, text, HEADERS.sample).map((f, i) => {
    const line = i + 2;
    return {
      v: num(file, line, "V", f[6]!),
      y: num(file, line, "Y", f[7]!),
    };
  });
}
