/**
 * Temporal and community panels: time-flow scatter (days across, hours up),
 * stacked activity histogram, dendrogram cut control. Models are pure
 * functions of server payloads; SVG builders sit on top.
 */

import type { DendrogramPayload, EventsPayload, SeriesPayload } from "./types.js";
import { communityColor } from "./render.js";

export interface ScatterPoint {
  dayIndex: number;
  day: string;
  hour: number;
  type: string;
  src: number | string;
  dst: number | string;
}

/** One scatter point per event; day on x, hour of day on y. */
export function scatterModel(events: EventsPayload): ScatterPoint[] {
  const days = [...new Set(events.points.map((p) => p.day))].sort();
  const index = new Map(days.map((d, i) => [d, i]));
  return events.points.map((p) => ({
    dayIndex: index.get(p.day)!,
    day: p.day,
    hour: p.hour,
    type: p.type,
    src: p.src,
    dst: p.dst,
  }));
}

const TYPE_COLORS: Record<string, string> = {
  VOICE: "#4c78a8",
  SMS: "#f58518",
  MMS: "#54a24b",
  INTERNET: "#b279a2",
  OTHER: "#9d755d",
};

export function renderScatter(events: EventsPayload, width = 700, height = 300): string {
  const points = scatterModel(events);
  const days = Math.max(1, new Set(points.map((p) => p.day)).size);
  const xStep = (width - 60) / days;
  const yScale = (height - 40) / 24;
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" class="scatter" viewBox="0 0 ${width} ${height}">`,
  ];
  for (let h = 0; h <= 24; h += 6) {
    const y = height - 20 - h * yScale;
    parts.push(
      `<line x1="40" y1="${y.toFixed(1)}" x2="${width - 10}" y2="${y.toFixed(1)}" stroke="#eee"/>` +
        `<text class="tick" x="8" y="${(y + 4).toFixed(1)}">${h}h</text>`,
    );
  }
  for (const p of points) {
    const x = 40 + (p.dayIndex + 0.5) * xStep;
    const y = height - 20 - p.hour * yScale;
    parts.push(
      `<circle class="event" data-type="${p.type}" cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="2.5" ` +
        `fill="${TYPE_COLORS[p.type] ?? "#888"}" fill-opacity="0.7"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("\n");
}

export interface StackSegment {
  group: number;
  bin: number;
  value: number;
  y0: number;
  y1: number;
}

/**
 * Stacked histogram model: per bin, one segment per group in a stable
 * ascending-group order, cumulative heights bottom-up.
 */
export function histogramStacks(series: SeriesPayload): {
  groups: number[];
  binTotals: number[];
  segments: StackSegment[];
} {
  const groups = Object.keys(series.rows)
    .map(Number)
    .sort((a, b) => a - b);
  const binCount = series.bins.length;
  const binTotals = new Array(binCount).fill(0);
  const segments: StackSegment[] = [];
  for (let bin = 0; bin < binCount; bin++) {
    let cumulative = 0;
    for (const group of groups) {
      const value = series.rows[String(group)][bin] ?? 0;
      segments.push({ group, bin, value, y0: cumulative, y1: cumulative + value });
      cumulative += value;
    }
    binTotals[bin] = cumulative;
  }
  return { groups, binTotals, segments };
}

export function renderHistogram(series: SeriesPayload, width = 700, height = 300): string {
  const { groups, binTotals, segments } = histogramStacks(series);
  const peak = Math.max(1, ...binTotals);
  const binWidth = (width - 50) / Math.max(1, series.bins.length);
  const yScale = (height - 30) / peak;
  const groupIndex = new Map(groups.map((g, i) => [g, i]));
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" class="histogram" viewBox="0 0 ${width} ${height}">`,
  ];
  for (const seg of segments) {
    if (seg.value === 0) continue;
    const x = 40 + seg.bin * binWidth;
    const y = height - 20 - seg.y1 * yScale;
    parts.push(
      `<rect class="stack" data-group="${seg.group}" data-bin="${seg.bin}" data-value="${seg.value}" ` +
        `x="${x.toFixed(1)}" y="${y.toFixed(1)}" width="${(binWidth * 0.85).toFixed(1)}" ` +
        `height="${(seg.value * yScale).toFixed(1)}" fill="${communityColor(groupIndex.get(seg.group)!)}"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("\n");
}

export interface CutOption {
  merges: number;
  clusters: number;
  q: number;
}

/**
 * Dendrogram cut control model: the q track over merge counts, the best cut,
 * and the stepper targets (best cut, one merge back).
 */
export function cutControlModel(dendrogram: DendrogramPayload, leafCount: number): {
  options: CutOption[];
  bestCut: number;
  maxQRule: string;
  maxQMinusOneRule: string;
} {
  const options: CutOption[] = dendrogram.merges.map((merge, i) => ({
    merges: i + 1,
    clusters: leafCount - (i + 1),
    q: merge.q,
  }));
  return {
    options,
    bestCut: dendrogram.best_cut,
    maxQRule: "max_q",
    maxQMinusOneRule: "max_q_minus=1",
  };
}

export function renderCutControl(
  dendrogram: DendrogramPayload,
  leafCount: number,
  currentMerges: number | null,
  width = 700,
  height = 160,
): string {
  const { options, bestCut } = cutControlModel(dendrogram, leafCount);
  if (options.length === 0) return `<svg class="cut-control" viewBox="0 0 ${width} ${height}"></svg>`;
  const qs = options.map((o) => o.q);
  const lo = Math.min(...qs, 0);
  const hi = Math.max(...qs, 0.0001);
  const xStep = (width - 60) / Math.max(1, options.length - 1);
  const y = (q: number) => height - 20 - ((q - lo) / (hi - lo)) * (height - 40);
  const path = options
    .map((o, i) => `${i === 0 ? "M" : "L"}${(40 + i * xStep).toFixed(1)},${y(o.q).toFixed(1)}`)
    .join(" ");
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" class="cut-control" viewBox="0 0 ${width} ${height}">`,
    `<path class="q-track" d="${path}" fill="none" stroke="#4c78a8" stroke-width="2"/>`,
  ];
  const bestX = 40 + (bestCut - 1) * xStep;
  parts.push(
    `<line class="best-cut" x1="${bestX.toFixed(1)}" y1="10" x2="${bestX.toFixed(1)}" ` +
      `y2="${height - 10}" stroke="#e03131" stroke-dasharray="3 2"/>`,
  );
  if (currentMerges !== null && currentMerges >= 1) {
    const x = 40 + (currentMerges - 1) * xStep;
    parts.push(
      `<line class="current-cut" x1="${x.toFixed(1)}" y1="10" x2="${x.toFixed(1)}" ` +
        `y2="${height - 10}" stroke="#222"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("\n");
}

/** Live cluster count for the deletion slider, straight from the trace CSV rows. */
export function clustersAfterDeletions(
  traceRows: { step: number; clusters_after: number }[],
  deletions: number,
  initial: number,
): number {
  let clusters = initial;
  for (const row of traceRows) {
    if (row.step <= deletions) clusters = row.clusters_after;
  }
  return clusters;
}
