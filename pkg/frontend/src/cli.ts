/**
 * Batch figure renderer.
 *
 *   render <input.csv> <output.svg> [--title TEXT] [--logy]
 *
 * Reads a regret-summary CSV, renders the quantile-curve figure, and writes
 * it as an SVG image. Exit status 0 on success; 1 with a `file:line:column`
 * diagnostic when the input violates the schema or on I/O failure; 2 on
 * usage errors. The input file is only ever read, never written.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { basename } from "node:path";

import { CsvSchemaError, parseSummaryCsv } from "./csv";
import { renderFigure } from "./figure";

export const USAGE = "usage: render <input.csv> <output image> [--title TEXT] [--logy]";

interface RenderCommand {
  input: string;
  output: string;
  title?: string;
  logY: boolean;
}

function parseArgs(argv: readonly string[]): RenderCommand {
  if (argv[0] !== "render") {
    throw new UsageError(argv.length === 0 ? "missing command" : `unknown command ${JSON.stringify(argv[0])}`);
  }
  const positional: string[] = [];
  let title: string | undefined;
  let logY = false;
  for (let i = 1; i < argv.length; i += 1) {
    const arg = argv[i] ?? "";
    if (arg === "--title") {
      const value = argv[i + 1];
      if (value === undefined) {
        throw new UsageError("--title requires a value");
      }
      title = value;
      i += 1;
    } else if (arg === "--logy") {
      logY = true;
    } else if (arg.startsWith("--")) {
      throw new UsageError(`unknown option ${JSON.stringify(arg)}`);
    } else {
      positional.push(arg);
    }
  }
  if (positional.length !== 2) {
    throw new UsageError(`expected an input CSV and an output image path, found ${positional.length} positional arguments`);
  }
  const [input, output] = positional as [string, string];
  return { input, output, title, logY };
}

class UsageError extends Error {}

export function run(
  argv: readonly string[],
  stdout: (line: string) => void = (line) => process.stdout.write(line + "\n"),
  stderr: (line: string) => void = (line) => process.stderr.write(line + "\n"),
): number {
  let command: RenderCommand;
  try {
    command = parseArgs(argv);
  } catch (error) {
    if (error instanceof UsageError) {
      stderr(`error: ${error.message}`);
      stderr(USAGE);
      return 2;
    }
    throw error;
  }

  try {
    const text = readFileSync(command.input, "utf8");
    const table = parseSummaryCsv(text, command.input);
    const svg = renderFigure(table, {
      title: command.title ?? basename(command.input),
      logY: command.logY,
    });
    writeFileSync(command.output, svg, "utf8");
    stdout(`wrote ${command.output} (${table.rounds.length} rows plotted)`);
    return 0;
  } catch (error) {
    if (error instanceof CsvSchemaError) {
      stderr(`error: ${error.message}`);
      return 1;
    }
    if (error instanceof Error) {
      stderr(`error: ${error.message}`);
      return 1;
    }
    throw error;
  }
}

if (require.main === module) {
  process.exit(run(process.argv.slice(2)));
}
