import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { CsvSchemaError, EXPECTED_HEADER, SERIES_NAMES, parseSummaryCsv } from "../src/csv";

const FIXTURE = fileURLToPath(new URL("./fixtures/regret_summary.csv", import.meta.url));

function schemaError(text: string): CsvSchemaError {
  try {
    parseSummaryCsv(text, "input.csv");
  } catch (error) {
    if (error instanceof CsvSchemaError) {
      return error;
    }
    throw error;
  }
  throw new Error("expected CsvSchemaError");
}

describe("parseSummaryCsv", () => {
  it("reads the committed 1000-row summary produced by the simulator CLI", () => {
    const table = parseSummaryCsv(readFileSync(FIXTURE, "utf8"), FIXTURE);
    expect(table.rounds).toHaveLength(1000);
    expect(table.rounds[0]).toBe(1);
    expect(table.rounds[999]).toBe(1000);
    for (const name of SERIES_NAMES) {
      expect(table.series[name]).toHaveLength(1000);
    }
    // Spot checks against the literal first and last fixture rows.
    expect(table.series.mean[0]).toBe(0.55000000000000004);
    expect(table.series.p05[0]).toBe(-1);
    expect(table.series.p95[0]).toBe(1);
    expect(table.series.mean[999]).toBe(0.016425000000000006);
  });

  it("accepts CRLF line endings and a trailing newline", () => {
    const text = EXPECTED_HEADER + "\r\n" + "1,0.5,0.1,0.2,0.3,0.4,0.6\r\n";
    const table = parseSummaryCsv(text, "input.csv");
    expect(table.rounds).toEqual([1]);
    expect(table.series.p50).toEqual([0.3]);
  });

  it("accepts a single-row file", () => {
    const table = parseSummaryCsv(EXPECTED_HEADER + "\n5,1,2,3,4,5,6\n", "input.csv");
    expect(table.rounds).toEqual([5]);
    expect(table.series.p95).toEqual([6]);
  });

  it("rejects a header typo with the line and character column of the bad field", () => {
    const error = schemaError("t,mean,p05,p52,p50,p75,p95\n1,0,0,0,0,0,0\n");
    expect(error.line).toBe(1);
    // "t,mean,p05," is 11 characters, so the offending field starts at column 12.
    expect(error.column).toBe(12);
    expect(error.message).toBe(
      'input.csv:1:12: header mismatch: expected "p25", found "p52" (header must be exactly "t,mean,p05,p25,p50,p75,p95")',
    );
  });

  it("rejects a truncated header pointing at the end of line", () => {
    const error = schemaError("t,mean,p05,p25,p50,p75\n");
    expect(error.line).toBe(1);
    expect(error.detail).toContain('expected "p95", found end of line');
  });

  it("rejects an empty file at 1:1", () => {
    const error = schemaError("");
    expect([error.line, error.column]).toEqual([1, 1]);
    expect(error.detail).toContain("empty file");
  });

  it("rejects a header-only file", () => {
    const error = schemaError(EXPECTED_HEADER + "\n");
    expect(error.line).toBe(2);
    expect(error.detail).toContain("no data rows");
  });

  it("rejects a short row at the end-of-line column", () => {
    const row = "1,0.5,0.1,0.2,0.3";
    const error = schemaError(EXPECTED_HEADER + "\n" + row + "\n");
    expect(error.line).toBe(2);
    expect(error.column).toBe(row.length + 1);
    expect(error.detail).toBe("expected 7 fields, found 5");
  });

  it("rejects a long row at the start of the first extra field", () => {
    const error = schemaError(EXPECTED_HEADER + "\n1,0.5,0.1,0.2,0.3,0.4,0.6,9\n");
    expect(error.line).toBe(2);
    expect(error.column).toBe("1,0.5,0.1,0.2,0.3,0.4,0.6,".length + 1);
    expect(error.detail).toBe("expected 7 fields, found 8");
  });

  it("rejects a non-numeric field at its exact column", () => {
    const error = schemaError(EXPECTED_HEADER + "\n1,0.5,oops,0.2,0.3,0.4,0.6\n");
    expect(error.line).toBe(2);
    expect(error.column).toBe("1,0.5,".length + 1);
    expect(error.detail).toContain('"p05" is not a finite number: "oops"');
  });

  it("rejects inf, nan, and empty fields", () => {
    for (const bad of ["inf", "nan", ""]) {
      const error = schemaError(EXPECTED_HEADER + `\n1,${bad},0.1,0.2,0.3,0.4,0.6\n`);
      expect(error.line).toBe(2);
      expect(error.detail).toContain("not a finite number");
    }
  });

  it("rejects a non-integer or non-increasing round index", () => {
    expect(schemaError(EXPECTED_HEADER + "\n1.5,0,0,0,0,0,0\n").detail).toContain(
      "positive integer",
    );
    expect(schemaError(EXPECTED_HEADER + "\n0,0,0,0,0,0,0\n").detail).toContain(
      "positive integer",
    );
    const error = schemaError(
      EXPECTED_HEADER + "\n1,0,0,0,0,0,0\n3,0,0,0,0,0,0\n2,0,0,0,0,0,0\n",
    );
    expect(error.line).toBe(4);
    expect(error.detail).toBe('"t" must be strictly increasing: 2 follows 3');
  });

  it("rejects a blank line inside the data section", () => {
    const error = schemaError(EXPECTED_HEADER + "\n1,0,0,0,0,0,0\n\n2,0,0,0,0,0,0\n");
    expect(error.line).toBe(3);
    expect(error.detail).toContain("blank line");
  });
});
