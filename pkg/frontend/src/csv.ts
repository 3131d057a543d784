/**
 * Strict reader for regret-summary CSV files.
 *
 * The accepted schema is exactly one header line `t,mean,p05,p25,p50,p75,p95`
 * followed by data rows of seven numeric fields, where `t` is a strictly
 * increasing positive integer. Any deviation raises CsvSchemaError carrying
 * a 1-based line and character column, so callers can print
 * `file:line:column: message` diagnostics.
 */

export const EXPECTED_COLUMNS = ["t", "mean", "p05", "p25", "p50", "p75", "p95"] as const;

export const EXPECTED_HEADER: string = EXPECTED_COLUMNS.join(",");

export type SeriesName = Exclude<(typeof EXPECTED_COLUMNS)[number], "t">;

export const SERIES_NAMES: readonly SeriesName[] = ["mean", "p05", "p25", "p50", "p75", "p95"];

export class CsvSchemaError extends Error {
  readonly file: string;
  readonly line: number;
  readonly column: number;
  readonly detail: string;

  constructor(file: string, line: number, column: number, detail: string) {
    super(`${file}:${line}:${column}: ${detail}`);
    this.name = "CsvSchemaError";
    this.file = file;
    this.line = line;
    this.column = column;
    this.detail = detail;
  }
}

export interface SummaryTable {
  /** The `t` column: strictly increasing positive integers. */
  readonly rounds: number[];
  /** One numeric array per value column, all the same length as `rounds`. */
  readonly series: Record<SeriesName, number[]>;
}

/** 1-based character column at which field `index` starts within its line. */
function fieldColumn(fields: readonly string[], index: number): number {
  let column = 1;
  for (let i = 0; i < index; i += 1) {
    column += (fields[i] ?? "").length + 1; // field text plus the comma
  }
  return column;
}

/** Finite-number parser that rejects empty fields, inf, nan, and trailing junk. */
function parseFiniteNumber(text: string): number | undefined {
  if (text.length === 0 || text.trim() !== text) {
    return undefined;
  }
  const value = Number(text);
  return Number.isFinite(value) ? value : undefined;
}

export function parseSummaryCsv(text: string, file: string): SummaryTable {
  // Tolerate CRLF line endings and one trailing newline; everything else is strict.
  const lines = text.split("\n").map((line) => (line.endsWith("\r") ? line.slice(0, -1) : line));
  if (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  if (lines.length === 0) {
    throw new CsvSchemaError(file, 1, 1, "empty file; expected header " + JSON.stringify(EXPECTED_HEADER));
  }

  const headerLine = lines[0] ?? "";
  if (headerLine !== EXPECTED_HEADER) {
    const got = headerLine.split(",");
    let at = 0;
    while (at < EXPECTED_COLUMNS.length && got[at] === EXPECTED_COLUMNS[at]) {
      at += 1;
    }
    const column = fieldColumn(got, Math.min(at, got.length));
    const found = at < got.length ? JSON.stringify(got[at]) : "end of line";
    const expected =
      at < EXPECTED_COLUMNS.length ? JSON.stringify(EXPECTED_COLUMNS[at]) : "end of line";
    throw new CsvSchemaError(
      file,
      1,
      column,
      `header mismatch: expected ${expected}, found ${found} (header must be exactly ${JSON.stringify(EXPECTED_HEADER)})`,
    );
  }

  const rounds: number[] = [];
  const series: Record<SeriesName, number[]> = {
    mean: [],
    p05: [],
    p25: [],
    p50: [],
    p75: [],
    p95: [],
  };

  for (let i = 1; i < lines.length; i += 1) {
    const lineNumber = i + 1;
    const line = lines[i] ?? "";
    if (line === "") {
      throw new CsvSchemaError(file, lineNumber, 1, "blank line inside data section");
    }
    const fields = line.split(",");
    if (fields.length !== EXPECTED_COLUMNS.length) {
      const column =
        fields.length > EXPECTED_COLUMNS.length
          ? fieldColumn(fields, EXPECTED_COLUMNS.length)
          : line.length + 1;
      throw new CsvSchemaError(
        file,
        lineNumber,
        column,
        `expected ${EXPECTED_COLUMNS.length} fields, found ${fields.length}`,
      );
    }

    const values: number[] = [];
    for (let k = 0; k < fields.length; k += 1) {
      const raw = fields[k] ?? "";
      const value = parseFiniteNumber(raw);
      if (value === undefined) {
        throw new CsvSchemaError(
          file,
          lineNumber,
          fieldColumn(fields, k),
          `field ${JSON.stringify(EXPECTED_COLUMNS[k])} is not a finite number: ${JSON.stringify(raw)}`,
        );
      }
      values.push(value);
    }

    const t = values[0] ?? NaN;
    if (!Number.isInteger(t) || t < 1) {
      throw new CsvSchemaError(file, lineNumber, 1, `"t" must be a positive integer, found ${JSON.stringify(fields[0])}`);
    }
    const previous = rounds.length > 0 ? rounds[rounds.length - 1] ?? 0 : 0;
    if (t <= previous) {
      throw new CsvSchemaError(
        file,
        lineNumber,
        1,
        `"t" must be strictly increasing: ${t} follows ${previous}`,
      );
    }

    rounds.push(t);
    for (let k = 0; k < SERIES_NAMES.length; k += 1) {
      const name = SERIES_NAMES[k] as SeriesName;
      series[name].push(values[k + 1] ?? NaN);
    }
  }

  if (rounds.length === 0) {
    throw new CsvSchemaError(file, 2, 1, "no data rows after the header");
  }

  return { rounds, series };
}
