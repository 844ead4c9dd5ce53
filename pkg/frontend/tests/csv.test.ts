import { describe, expect, it } from "vitest";

import {
  parseEstimates, parseMetrics, parsePriorPredictive, parseSample,
  parseSchoolCates, parseTruth, SchemaError,
} from "../src/csv.js";

const EST_HEADER =
  "replication,estimator,subpopulation,point,se,lower95,upper95,n_sample_subset,skipped";

describe("parseEstimates", () => {
  it("reads well formed rows", () => {
    const text = `${EST_HEADER}\n0,OLS,ATE,0.12,0.01,0.1,0.14,12000,false\n`;
    const rows = parseEstimates("e.csv", text);
    expect(rows).toHaveLength(1);
    expect(rows[0]).toMatchObject({
      replication: 0, estimator: "OLS", subpopulation: "ATE",
      point: 0.12, nSubset: 12000, skipped: false,
    });
  });

  it("accepts nan fields only on skipped rows", () => {
    const ok = `${EST_HEADER}\n0,OLS,ATE,nan,nan,nan,nan,0,true\n`;
    expect(parseEstimates("e.csv", ok)[0]!.skipped).toBe(true);
    const bad = `${EST_HEADER}\n0,OLS,ATE,nan,0.01,0.1,0.14,12,false\n`;
    expect(() => parseEstimates("e.csv", bad)).toThrow(/e\.csv:2:.*point/);
  });

  it("rejects a wrong header with line 1", () => {
    const text = "rep,estimator,subpopulation,point,se,lower95,upper95,n,skipped\n0,OLS,ATE,1,1,1,1,1,false\n";
    expect(() => parseEstimates("e.csv", text)).toThrow(SchemaError);
    expect(() => parseEstimates("e.csv", text)).toThrow(/^e\.csv:1:/);
  });

  it("rejects a short row with its line number", () => {
    const text = `${EST_HEADER}\n0,OLS,ATE,0.12,0.01,0.1,0.14,12000,false\n0,SVY,ATE,0.1\n`;
    expect(() => parseEstimates("e.csv", text)).toThrow(/e\.csv:3: expected 9 fields, got 4/);
  });

  it("rejects an empty file and a header-only file", () => {
    expect(() => parseEstimates("e.csv", "")).toThrow(/empty file/);
    expect(() => parseEstimates("e.csv", `${EST_HEADER}\n`)).toThrow(/no data rows/);
  });

  it("rejects non-numeric and non-integer fields", () => {
    const text = `${EST_HEADER}\n0,OLS,ATE,oops,0.01,0.1,0.14,12000,false\n`;
    expect(() => parseEstimates("e.csv", text)).toThrow(/not a number: oops/);
    const frac = `${EST_HEADER}\n0,OLS,ATE,0.12,0.01,0.1,0.14,12.5,false\n`;
    expect(() => parseEstimates("e.csv", frac)).toThrow(/not an integer: 12\.5/);
  });

  it("rejects loose boolean spellings", () => {
    const text = `${EST_HEADER}\n0,OLS,ATE,0.12,0.01,0.1,0.14,12000,True\n`;
    expect(() => parseEstimates("e.csv", text)).toThrow(/expected true\/false, got True/);
  });
});

describe("parseTruth", () => {
  it("maps labels to values", () => {
    const m = parseTruth("t.csv", "subpopulation,tau\nATE,0.126\nSA=Low,0.11\n");
    expect(m.get("ATE")).toBe(0.126);
    expect(m.get("SA=Low")).toBe(0.11);
  });

  it("rejects a non-finite truth value", () => {
    expect(() => parseTruth("t.csv", "subpopulation,tau\nATE,inf\n"))
      .toThrow(/t\.csv:2:/);
  });
});

describe("parseMetrics", () => {
  const header = "estimator,subpopulation,mse,bias_sq,variance,psr,coverage,n_reps,n_skipped";

  it("keeps the raw column text for pass-through", () => {
    const mse = "0.00012999999999999999";
    const text = `${header}\nOLS,ATE,${mse},1e-05,0.00012,1.5,0.95,20,0\n`;
    const rows = parseMetrics("m.csv", text);
    expect(rows[0]!.raw.mse).toBe(mse);
    expect(rows[0]!.mse).toBeCloseTo(0.00013);
  });

  it("allows nan metric cells", () => {
    const text = `${header}\nOLS,ATE,nan,nan,nan,nan,nan,0,20\n`;
    expect(Number.isNaN(parseMetrics("m.csv", text)[0]!.mse)).toBe(true);
  });
});

describe("parseSchoolCates", () => {
  it("parses the observed flag strictly", () => {
    const header = "school_id,stratum,observed,estimator,point,se,lower95,upper95,truth";
    const text = `${header}\n3,0,true,MRP-MI,0.1,0.02,0.06,0.14,0.12\n`;
    expect(parseSchoolCates("s.csv", text)[0]!.observed).toBe(true);
    const bad = `${header}\n3,0,1,MRP-MI,0.1,0.02,0.06,0.14,0.12\n`;
    expect(() => parseSchoolCates("s.csv", bad)).toThrow(/s\.csv:2:/);
  });
});

describe("parsePriorPredictive and parseSample", () => {
  it("round-trips the small schemas", () => {
    const pp = parsePriorPredictive("p.csv", "model,replicate,row,value\nprev_gpa,0,0,2.5\n");
    expect(pp[0]).toEqual({ model: "prev_gpa", replicate: 0, row: 0, value: 2.5 });
    const header = "individual_id,school_id,stratum,G,RE,ME,V,Y,Z";
    const s = parseSample("s.csv", `${header}\n0,1,0,1,2,0,2.5,3.1,1\n`);
    expect(s[0]).toEqual({ v: 2.5, y: 3.1 });
  });
});
