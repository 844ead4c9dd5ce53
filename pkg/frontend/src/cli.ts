#!/usr/bin/env node
/**
 * plots --figure {fig2|fig3|fig4|fig5|tables} --in FILE [--truth FILE]
 *       [--sample FILE] --out FILE
 *
 * Renders one deterministic SVG figure or markdown table from the
 * simulation harness CSV outputs. Any schema violation exits nonzero
 * with a descriptive message and writes no output file.
 */

import { readFileSync, writeFileSync } from "node:fs";
import process from "node:process";
import { pathToFileURL } from "node:url";

import {
  parseEstimates, parseMetrics, parsePriorPredictive, parseSample,
  parseSchoolCates, parseTruth, SchemaError,
} from "./csv.js";
import { fig2, fig3, fig4, fig5 } from "./figures.js";
import { metricsTable } from "./tables.js";

const FIGURES = ["fig2", "fig3", "fig4", "fig5", "tables"];

interface Args {
  figure: string;
  input: string;
  truth?: string;
  sample?: string;
  out: string;
}

function usage(): string {
  return "usage: plots --figure {fig2|fig3|fig4|fig5|tables} --in FILE"
    + " [--truth FILE] [--sample FILE] --out FILE";
}

function parseArgs(argv: string[]): Args {
  const opts = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i]!;
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new Error(usage());
    }
    opts.set(flag.slice(2), value);
  }
  const figure = opts.get("figure");
  const input = opts.get("in");
  const out = opts.get("out");
  if (!figure || !input || !out) throw new Error(usage());
  if (!FIGURES.includes(figure)) {
    throw new Error(`unknown figure ${figure}; expected one of ${FIGURES.join(", ")}`);
  }
  return { figure, input, truth: opts.get("truth"), sample: opts.get("sample"), out };
}

function readText(path: string): string {
  try {
    return readFileSync(path, "utf8");
  } catch (err) {
    throw new Error(`cannot read ${path}: ${(err as Error).message}`);
  }
}

export function render(args: Args): string {
  const text = readText(args.input);
  switch (args.figure) {
    case "fig3":
    case "fig4": {
      if (!args.truth) throw new Error(`${args.figure} requires --truth`);
      const estimates = parseEstimates(args.input, text);
      const truth = parseTruth(args.truth, readText(args.truth));
      return args.figure === "fig3" ? fig3(estimates, truth) : fig4(estimates, truth);
    }
    case "fig5":
      return fig5(parseSchoolCates(args.input, text));
    case "fig2": {
      if (!args.sample) throw new Error("fig2 requires --sample");
      const prior = parsePriorPredictive(args.input, text);
      const sample = parseSample(args.sample, readText(args.sample));
      return fig2(prior, sample);
    }
    case "tables":
      return metricsTable(parseMetrics(args.input, text));
    default:
      throw new Error(usage());
  }
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n`);
    return 2;
  }
  let rendered: string;
  try {
    rendered = render(args);
  } catch (err) {
    const tag = err instanceof SchemaError ? "schema error" : "error";
    process.stderr.write(`${tag}: ${(err as Error).message}\n`);
    return 1;
  }
  writeFileSync(args.out, rendered, "utf8");
  return 0;
}

const invoked = process.argv[1];
if (invoked && import.meta.url === pathToFileURL(invoked).href) {
  process.exitCode = main(process.argv.slice(2));
}
