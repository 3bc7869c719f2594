/**
 * SVG builders for the node-link and radial views. Pure string-producing
 * functions so they test without a DOM; main.ts mounts the output.
 *
 * Visual conventions: selected node tinted red, 1-hop neighbors of the
 * hovered node yellow, expanded communities wrapped in translucent hulls,
 * collapsed communities drawn as star-marked aggregates labeled with their
 * boundary member ids.
 */

import {
  type CommunityHull,
  type Positions,
  communityHulls,
  forceLayout,
  layoutInputs,
  membershipOf,
  neighborsOf,
  radialPositions,
  radialRings,
} from "./layout.js";
import type { ViewGraphPayload } from "./types.js";

const PALETTE = [
  "#4c78a8", "#f58518", "#54a24b", "#b279a2", "#e45756",
  "#72b7b2", "#eeca3b", "#9d755d", "#bab0ac", "#667788",
];

export function communityColor(index: number): string {
  return PALETTE[index % PALETTE.length];
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function hullPath(hull: CommunityHull): string {
  const d = hull.outline
    .map((p, i) => `${i === 0 ? "M" : "L"}${p.x.toFixed(1)},${p.y.toFixed(1)}`)
    .join(" ");
  return `${d} Z`;
}

function starPoints(cx: number, cy: number, outer: number, inner: number): string {
  const points: string[] = [];
  for (let i = 0; i < 10; i++) {
    const radius = i % 2 === 0 ? outer : inner;
    const angle = (Math.PI * i) / 5 - Math.PI / 2;
    points.push(`${(cx + radius * Math.cos(angle)).toFixed(1)},${(cy + radius * Math.sin(angle)).toFixed(1)}`);
  }
  return points.join(" ");
}

export interface NodeLinkOptions {
  width?: number;
  height?: number;
  seed?: number;
  hovered?: number | null;
}

export interface NodeLinkScene {
  svg: string;
  positions: Positions;
  hulls: CommunityHull[];
}

/** Force-directed node-link scene with hulls and macro stars. */
export function renderNodeLink(view: ViewGraphPayload, options: NodeLinkOptions = {}): NodeLinkScene {
  const width = options.width ?? 800;
  const height = options.height ?? 600;
  const { items, edges } = layoutInputs(view);
  const positions = forceLayout(items, edges, { width, height, seed: options.seed ?? 42 });
  const hulls = communityHulls(view, positions);
  const membership = membershipOf(view);
  const communityIndex = new Map(view.expanded_communities.map((cid, i) => [cid, i]));
  const highlight = options.hovered != null ? neighborsOf(view, options.hovered) : new Set<number>();

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" class="nodelink" viewBox="0 0 ${width} ${height}">`,
  );
  for (const hull of hulls) {
    if (hull.outline.length === 0) continue;
    const color = communityColor(communityIndex.get(hull.community) ?? 0);
    parts.push(
      `<path class="hull" data-community="${hull.community}" d="${hullPath(hull)}" ` +
        `fill="${color}" fill-opacity="0.15" stroke="${color}" stroke-opacity="0.5"/>`,
    );
  }
  for (const edge of view.node_edges) {
    const a = positions.get(`n${edge.src}`);
    const b = positions.get(`n${edge.dst}`);
    if (!a || !b) continue;
    const widthPx = 1 + Math.log2(1 + edge.weight);
    parts.push(
      `<line class="edge" x1="${a.x.toFixed(1)}" y1="${a.y.toFixed(1)}" ` +
        `x2="${b.x.toFixed(1)}" y2="${b.y.toFixed(1)}" stroke="#99a" stroke-width="${widthPx.toFixed(2)}"/>`,
    );
  }
  for (const edge of view.macro_edges) {
    const key = (ref: { kind: string; id: number }) => (ref.kind === "node" ? `n${ref.id}` : `m${ref.id}`);
    const a = positions.get(key(edge.src));
    const b = positions.get(key(edge.dst));
    if (!a || !b) continue;
    parts.push(
      `<line class="macro-edge" x1="${a.x.toFixed(1)}" y1="${a.y.toFixed(1)}" ` +
        `x2="${b.x.toFixed(1)}" y2="${b.y.toFixed(1)}" stroke="#777" stroke-dasharray="4 3" ` +
        `stroke-width="${(1 + Math.log2(1 + edge.weight)).toFixed(2)}"/>`,
    );
  }
  for (const node of view.expanded_nodes) {
    const p = positions.get(`n${node}`);
    if (!p) continue;
    const community = membership.get(node);
    let fill = communityColor(communityIndex.get(community ?? -1) ?? 0);
    if (highlight.has(node)) fill = "#f2c744"; // 1-hop neighbors of hover
    if (view.selected === node) fill = "#e03131"; // selected
    parts.push(
      `<circle class="node" data-id="${node}" cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="7" ` +
        `fill="${fill}" stroke="#223"/>` +
        `<text class="label" x="${(p.x + 9).toFixed(1)}" y="${(p.y + 4).toFixed(1)}">${node}</text>`,
    );
  }
  for (const macro of view.macro_nodes) {
    const p = positions.get(`m${macro.community}`);
    if (!p) continue;
    const label =
      macro.boundary.join(",") + (macro.boundary_omitted > 0 ? `,+${macro.boundary_omitted}` : "");
    parts.push(
      `<g class="macro" data-community="${macro.community}">` +
        `<circle cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="${(10 + macro.size).toFixed(1)}" ` +
        `fill="#ccd" stroke="#445"/>` +
        `<polygon class="star" points="${starPoints(p.x, p.y, 8, 3.5)}" fill="#e03131"/>` +
        `<text class="label" x="${(p.x + 12 + macro.size).toFixed(1)}" y="${p.y.toFixed(1)}">` +
        `${esc(label)} (${macro.size})</text></g>`,
    );
  }
  parts.push("</svg>");
  return { svg: parts.join("\n"), positions, hulls };
}

export interface RadialScene {
  svg: string;
  rings: { depth: number; nodes: number[] }[];
}

/** Egocentric rings around a selected node; edge thickness tracks weight. */
export function renderRadial(
  view: ViewGraphPayload,
  center: number,
  width = 800,
  height = 600,
): RadialScene {
  const rings = radialRings(view.node_edges, center);
  const positions = radialPositions(rings, width, height);
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" class="radial" viewBox="0 0 ${width} ${height}">`,
  ];
  for (const ring of rings) {
    if (ring.depth === 0) continue;
    parts.push(
      `<circle class="ring" cx="${width / 2}" cy="${height / 2}" r="${ring.depth * 80}" ` +
        `fill="none" stroke="#dde"/>`,
    );
  }
  const seen = new Set(rings.flatMap((ring) => ring.nodes));
  for (const edge of view.node_edges) {
    if (!seen.has(edge.src) || !seen.has(edge.dst)) continue;
    const a = positions.get(`n${edge.src}`)!;
    const b = positions.get(`n${edge.dst}`)!;
    parts.push(
      `<line class="edge" data-weight="${edge.weight}" x1="${a.x.toFixed(1)}" y1="${a.y.toFixed(1)}" ` +
        `x2="${b.x.toFixed(1)}" y2="${b.y.toFixed(1)}" stroke="#99a" ` +
        `stroke-width="${(1 + Math.log2(1 + edge.weight)).toFixed(2)}"/>`,
    );
  }
  for (const ring of rings) {
    for (const node of ring.nodes) {
      const p = positions.get(`n${node}`)!;
      const fill = node === center ? "#e03131" : "#4c78a8";
      parts.push(
        `<circle class="node" data-id="${node}" cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="7" fill="${fill}"/>` +
          `<text class="label" x="${(p.x + 9).toFixed(1)}" y="${(p.y + 4).toFixed(1)}">${node}</text>`,
      );
    }
  }
  parts.push("</svg>");
  return { svg: parts.join("\n"), rings };
}
