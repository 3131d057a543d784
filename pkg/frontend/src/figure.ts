/**
 * Deterministic SVG rendering of a regret-summary table.
 *
 * The figure shows one curve per value column (mean plus the five quantiles)
 * against the round index, with the median drawn heavier than the rest. The
 * output is a pure function of the parsed table and the options: no
 * timestamps, no random identifiers. The exact numbers being plotted are
 * hashed into a `data-checksum` attribute on the SVG root so regression
 * tests can compare plotted data instead of pixels.
 */

import { createHash } from "node:crypto";

import { SERIES_NAMES, SeriesName, SummaryTable } from "./csv";

export interface FigureOptions {
  title?: string;
  logY?: boolean;
}

export interface PlottedSeries {
  readonly name: SeriesName;
  /** [round, plotted value] pairs; on a log axis values are already clamped. */
  readonly points: ReadonlyArray<readonly [number, number]>;
}

const WIDTH = 960;
const HEIGHT = 600;
const MARGIN = { top: 56, right: 170, bottom: 58, left: 78 } as const;

interface SeriesStyle {
  readonly color: string;
  readonly width: number;
  readonly dash?: string;
}

/** Median emphasized; the rest distinct by color, outer quantiles dashed. */
const STYLES: Record<SeriesName, SeriesStyle> = {
  mean: { color: "#1f77b4", width: 2.5 },
  p05: { color: "#8c564b", width: 1.5, dash: "5 4" },
  p25: { color: "#2ca02c", width: 1.5 },
  p50: { color: "#d62728", width: 3.5 },
  p75: { color: "#9467bd", width: 1.5 },
  p95: { color: "#e377c2", width: 1.5, dash: "5 4" },
};

/**
 * The data series exactly as they will be drawn. On a linear axis these are
 * the table values verbatim; on a log axis every value below the smallest
 * positive value in the table is clamped up to it, so the curves stay on
 * the canvas instead of diverging to -infinity.
 */
export function plottedSeries(table: SummaryTable, logY: boolean): PlottedSeries[] {
  let clampTo = Number.POSITIVE_INFINITY;
  if (logY) {
    for (const name of SERIES_NAMES) {
      for (const v of table.series[name]) {
        if (v > 0 && v < clampTo) {
          clampTo = v;
        }
      }
    }
    if (!Number.isFinite(clampTo)) {
      throw new Error("log scale requires at least one positive value in the data");
    }
  }
  return SERIES_NAMES.map((name) => ({
    name,
    points: table.rounds.map((t, i) => {
      const v = table.series[name][i] ?? NaN;
      return [t, logY ? Math.max(v, clampTo) : v] as const;
    }),
  }));
}

/** SHA-256 over a canonical serialization of the plotted data. */
export function seriesChecksum(series: readonly PlottedSeries[], logY: boolean): string {
  const canonical = JSON.stringify({
    axis: logY ? "log" : "linear",
    series: series.map((s) => ({ name: s.name, points: s.points })),
  });
  return createHash("sha256").update(canonical, "utf8").digest("hex");
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Pixel coordinates rounded to a fixed grid so output bytes are stable. */
function px(value: number): string {
  return value.toFixed(2);
}

function formatTick(value: number): string {
  if (value === 0) {
    return "0";
  }
  const magnitude = Math.abs(value);
  if (magnitude >= 1e4 || magnitude < 1e-3) {
    return value.toExponential(2).replace(/\.?0+e/, "e");
  }
  return String(Number(value.toPrecision(6)));
}

/** Round-valued tick positions covering [lo, hi] with a 1/2/5 step. */
function linearTicks(lo: number, hi: number, target = 6): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const rawStep = (hi - lo) / target;
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = power;
  for (const multiple of [1, 2, 5, 10]) {
    step = multiple * power;
    if ((hi - lo) / step <= target + 1) {
      break;
    }
  }
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

/** Decade ticks for a log axis, falling back to minor mantissas on short spans. */
function logTicks(loExp: number, hiExp: number): number[] {
  const ticks: number[] = [];
  for (let k = Math.ceil(loExp - 1e-9); k <= hiExp + 1e-9; k += 1) {
    ticks.push(Math.pow(10, k));
  }
  if (ticks.length < 3) {
    const minor: number[] = [];
    for (let k = Math.floor(loExp) - 1; k <= Math.ceil(hiExp); k += 1) {
      for (const mantissa of [1, 2, 5]) {
        const v = mantissa * Math.pow(10, k);
        const e = Math.log10(v);
        if (e >= loExp - 1e-9 && e <= hiExp + 1e-9) {
          minor.push(v);
        }
      }
    }
    return minor.length > ticks.length ? minor : ticks;
  }
  return ticks;
}

export function renderFigure(table: SummaryTable, options: FigureOptions = {}): string {
  const logY = options.logY ?? false;
  const title = options.title ?? "Regret summary";
  const series = plottedSeries(table, logY);
  const checksum = seriesChecksum(series, logY);

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;

  // Horizontal domain over the rounds, padded when degenerate (one row).
  let x0 = table.rounds[0] ?? 0;
  let x1 = table.rounds[table.rounds.length - 1] ?? 1;
  if (x0 === x1) {
    x0 -= 0.5;
    x1 += 0.5;
  }

  // Vertical domain over every plotted value, in log10 space on a log axis.
  const transform = (v: number): number => (logY ? Math.log10(v) : v);
  let lo = Number.POSITIVE_INFINITY;
  let hi = Number.NEGATIVE_INFINITY;
  for (const s of series) {
    for (const [, v] of s.points) {
      const y = transform(v);
      if (y < lo) lo = y;
      if (y > hi) hi = y;
    }
  }
  if (lo === hi) {
    const pad = Math.max(Math.abs(lo) * 0.1, logY ? 0.5 : 1e-6);
    lo -= pad;
    hi += pad;
  } else {
    const pad = (hi - lo) * 0.06;
    lo -= pad;
    hi += pad;
  }

  const xPix = (t: number): number => MARGIN.left + ((t - x0) / (x1 - x0)) * plotW;
  const yPix = (v: number): number => MARGIN.top + (1 - (transform(v) - lo) / (hi - lo)) * plotH;
  const yPixFromAxis = (y: number): number => MARGIN.top + (1 - (y - lo) / (hi - lo)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" data-checksum="${checksum}">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  parts.push(
    `<text x="${px(WIDTH / 2)}" y="30" text-anchor="middle" ` +
      `font-family="sans-serif" font-size="20" fill="#222222">${escapeXml(title)}</text>`,
  );

  // Gridlines and axis ticks.
  const xTicks = linearTicks(x0, x1).filter((t) => t >= x0 && t <= x1);
  const yTickValues = logY ? logTicks(lo, hi) : linearTicks(lo, hi);
  for (const t of xTicks) {
    const x = px(xPix(t));
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + plotH}" stroke="#e5e5e5" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${x}" y="${MARGIN.top + plotH + 22}" text-anchor="middle" ` +
        `font-family="sans-serif" font-size="13" fill="#444444">${formatTick(t)}</text>`,
    );
  }
  for (const v of yTickValues) {
    const axisY = logY ? Math.log10(v) : v;
    if (axisY < lo - 1e-12 || axisY > hi + 1e-12) {
      continue;
    }
    const y = px(yPixFromAxis(axisY));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" stroke="#e5e5e5" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 10}" y="${y}" text-anchor="end" dominant-baseline="middle" ` +
        `font-family="sans-serif" font-size="13" fill="#444444">${formatTick(v)}</text>`,
    );
  }

  // Plot frame and axis labels.
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
      `fill="none" stroke="#333333" stroke-width="1"/>`,
  );
  parts.push(
    `<text x="${px(MARGIN.left + plotW / 2)}" y="${HEIGHT - 14}" text-anchor="middle" ` +
      `font-family="sans-serif" font-size="15" fill="#222222">t (round)</text>`,
  );
  parts.push(
    `<text x="22" y="${px(MARGIN.top + plotH / 2)}" text-anchor="middle" ` +
      `font-family="sans-serif" font-size="15" fill="#222222" ` +
      `transform="rotate(-90 22 ${px(MARGIN.top + plotH / 2)})">value${logY ? " (log scale)" : ""}</text>`,
  );

  // Curves: median last so its emphasized stroke sits on top.
  const drawOrder: SeriesName[] = ["p05", "p95", "p25", "p75", "mean", "p50"];
  for (const name of drawOrder) {
    const s = series.find((candidate) => candidate.name === name);
    if (s === undefined) {
      continue;
    }
    const style = STYLES[name];
    const dash = style.dash === undefined ? "" : ` stroke-dasharray="${style.dash}"`;
    if (s.points.length === 1) {
      const [t, v] = s.points[0] ?? [0, 0];
      parts.push(
        `<circle cx="${px(xPix(t))}" cy="${px(yPix(v))}" r="${style.width + 2}" fill="${style.color}" data-series="${name}"/>`,
      );
      continue;
    }
    const coords = s.points.map(([t, v]) => `${px(xPix(t))},${px(yPix(v))}`).join(" ");
    parts.push(
      `<polyline fill="none" stroke="${style.color}" stroke-width="${style.width}"${dash} ` +
        `stroke-linejoin="round" data-series="${name}" points="${coords}"/>`,
    );
  }

  // Legend, in the natural column order.
  let legendY = MARGIN.top + 8;
  const legendX = MARGIN.left + plotW + 18;
  for (const name of SERIES_NAMES) {
    const style = STYLES[name];
    const dash = style.dash === undefined ? "" : ` stroke-dasharray="${style.dash}"`;
    parts.push(
      `<line x1="${legendX}" y1="${legendY}" x2="${legendX + 30}" y2="${legendY}" ` +
        `stroke="${style.color}" stroke-width="${style.width}"${dash}/>`,
    );
    parts.push(
      `<text x="${legendX + 38}" y="${legendY + 4}" font-family="sans-serif" ` +
        `font-size="14" fill="#222222">${name}${name === "p50" ? " (median)" : ""}</text>`,
    );
    legendY += 24;
  }

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
