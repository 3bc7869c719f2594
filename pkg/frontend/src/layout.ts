/**
 * Presentation-side geometry: force-directed placement, radial (egocentric)
 * rings, convex hulls for expanded communities. Layout is the client's job;
 * topology and all analytics come from server payloads untouched.
 */

import type { ViewGraphPayload } from "./types.js";

export interface Point {
  x: number;
  y: number;
}

export type Positions = Map<string, Point>;

/** Deterministic 32-bit PRNG so layouts are reproducible in tests. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface LayoutItem {
  key: string;
  /** community id for hull grouping; null for macro-nodes */
  community: number | null;
}

export interface LayoutEdge {
  a: string;
  b: string;
  weight: number;
}

/** node -> community id lookup from the server's expanded membership map. */
export function membershipOf(view: ViewGraphPayload): Map<number, number> {
  const lookup = new Map<number, number>();
  for (const [cid, members] of Object.entries(view.expanded_members)) {
    for (const node of members) lookup.set(node, Number(cid));
  }
  return lookup;
}

/** Items and springs implied by a server view: nodes plus macro aggregates. */
export function layoutInputs(view: ViewGraphPayload): {
  items: LayoutItem[];
  edges: LayoutEdge[];
} {
  const membership = membershipOf(view);
  const items: LayoutItem[] = view.expanded_nodes.map((id) => ({
    key: `n${id}`,
    community: membership.get(id) ?? null,
  }));
  for (const macro of view.macro_nodes) {
    items.push({ key: `m${macro.community}`, community: null });
  }
  const edges: LayoutEdge[] = view.node_edges.map((e) => ({
    a: `n${e.src}`,
    b: `n${e.dst}`,
    weight: e.weight,
  }));
  for (const e of view.macro_edges) {
    const key = (ref: { kind: string; id: number }) =>
      ref.kind === "node" ? `n${ref.id}` : `m${ref.id}`;
    edges.push({ a: key(e.src), b: key(e.dst), weight: e.weight });
  }
  return { items, edges };
}

export interface ForceOptions {
  width?: number;
  height?: number;
  iterations?: number;
  seed?: number;
  /** extra spring pull between same-community items, keeps hulls compact */
  communityGravity?: number;
}

/**
 * Spring-electric placement with per-community gravity. Degenerate cases
 * (no items, or a blow-up producing non-finite coordinates) fall back to a
 * circular arrangement.
 */
export function forceLayout(
  items: LayoutItem[],
  edges: LayoutEdge[],
  options: ForceOptions = {},
): Positions {
  const width = options.width ?? 800;
  const height = options.height ?? 600;
  const iterations = options.iterations ?? 150;
  const rng = mulberry32(options.seed ?? 42);
  const gravity = options.communityGravity ?? 0.02;

  const positions: Positions = new Map();
  if (items.length === 0) return positions;
  for (const item of items) {
    positions.set(item.key, {
      x: width / 2 + (rng() - 0.5) * width * 0.8,
      y: height / 2 + (rng() - 0.5) * height * 0.8,
    });
  }
  const index = new Map(items.map((item, i) => [item.key, i]));
  const xs = items.map((item) => positions.get(item.key)!.x);
  const ys = items.map((item) => positions.get(item.key)!.y);
  const area = width * height;
  const ideal = Math.sqrt(area / items.length) * 0.6;

  const centroids = new Map<number, { x: number; y: number; n: number }>();
  for (let iter = 0; iter < iterations; iter++) {
    const temperature = (1 - iter / iterations) * 0.1 * Math.min(width, height);
    const dx = new Array(items.length).fill(0);
    const dy = new Array(items.length).fill(0);
    // repulsion
    for (let i = 0; i < items.length; i++) {
      for (let j = i + 1; j < items.length; j++) {
        let ex = xs[i] - xs[j];
        let ey = ys[i] - ys[j];
        let dist2 = ex * ex + ey * ey;
        if (dist2 < 1e-6) {
          ex = rng() - 0.5;
          ey = rng() - 0.5;
          dist2 = ex * ex + ey * ey;
        }
        const force = (ideal * ideal) / dist2;
        dx[i] += ex * force * 0.05;
        dy[i] += ey * force * 0.05;
        dx[j] -= ex * force * 0.05;
        dy[j] -= ey * force * 0.05;
      }
    }
    // springs
    for (const edge of edges) {
      const i = index.get(edge.a);
      const j = index.get(edge.b);
      if (i === undefined || j === undefined) continue;
      const ex = xs[j] - xs[i];
      const ey = ys[j] - ys[i];
      const dist = Math.sqrt(ex * ex + ey * ey) || 1;
      const pull = ((dist - ideal) / dist) * 0.1;
      dx[i] += ex * pull;
      dy[i] += ey * pull;
      dx[j] -= ex * pull;
      dy[j] -= ey * pull;
    }
    // community gravity
    centroids.clear();
    for (let i = 0; i < items.length; i++) {
      const community = items[i].community;
      if (community === null) continue;
      const c = centroids.get(community) ?? { x: 0, y: 0, n: 0 };
      c.x += xs[i];
      c.y += ys[i];
      c.n += 1;
      centroids.set(community, c);
    }
    for (let i = 0; i < items.length; i++) {
      const community = items[i].community;
      if (community === null) continue;
      const c = centroids.get(community)!;
      dx[i] += (c.x / c.n - xs[i]) * gravity;
      dy[i] += (c.y / c.n - ys[i]) * gravity;
    }
    for (let i = 0; i < items.length; i++) {
      const step = Math.sqrt(dx[i] * dx[i] + dy[i] * dy[i]);
      const clamp = step > temperature ? temperature / step : 1;
      xs[i] += dx[i] * clamp;
      ys[i] += dy[i] * clamp;
      xs[i] = Math.min(width - 20, Math.max(20, xs[i]));
      ys[i] = Math.min(height - 20, Math.max(20, ys[i]));
    }
  }

  let degenerate = false;
  for (let i = 0; i < items.length; i++) {
    if (!Number.isFinite(xs[i]) || !Number.isFinite(ys[i])) {
      degenerate = true;
      break;
    }
  }
  if (degenerate) return circularLayout(items, width, height);
  items.forEach((item, i) => positions.set(item.key, { x: xs[i], y: ys[i] }));
  return positions;
}

/** Fallback placement on one circle. */
export function circularLayout(items: LayoutItem[], width = 800, height = 600): Positions {
  const positions: Positions = new Map();
  const radius = Math.min(width, height) / 2 - 30;
  items.forEach((item, i) => {
    const angle = (2 * Math.PI * i) / items.length;
    positions.set(item.key, {
      x: width / 2 + radius * Math.cos(angle),
      y: height / 2 + radius * Math.sin(angle),
    });
  });
  return positions;
}

export interface RadialRing {
  depth: number;
  nodes: number[];
}

/** BFS rings around a center node; ring r sits on the r-th concentric circle. */
export function radialRings(
  edges: { src: number; dst: number }[],
  center: number,
): RadialRing[] {
  const adjacency = new Map<number, Set<number>>();
  const touch = (a: number, b: number) => {
    if (!adjacency.has(a)) adjacency.set(a, new Set());
    adjacency.get(a)!.add(b);
  };
  for (const e of edges) {
    touch(e.src, e.dst);
    touch(e.dst, e.src);
  }
  const depth = new Map<number, number>([[center, 0]]);
  const queue = [center];
  while (queue.length) {
    const v = queue.shift()!;
    for (const w of adjacency.get(v) ?? []) {
      if (!depth.has(w)) {
        depth.set(w, depth.get(v)! + 1);
        queue.push(w);
      }
    }
  }
  const rings = new Map<number, number[]>();
  for (const [node, d] of depth) {
    if (!rings.has(d)) rings.set(d, []);
    rings.get(d)!.push(node);
  }
  return [...rings.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([d, nodes]) => ({ depth: d, nodes: nodes.sort((a, b) => a - b) }));
}

export function radialPositions(
  rings: RadialRing[],
  width = 800,
  height = 600,
  ringGap = 80,
): Positions {
  const positions: Positions = new Map();
  const cx = width / 2;
  const cy = height / 2;
  for (const ring of rings) {
    if (ring.depth === 0) {
      positions.set(`n${ring.nodes[0]}`, { x: cx, y: cy });
      continue;
    }
    ring.nodes.forEach((node, i) => {
      const angle = (2 * Math.PI * i) / ring.nodes.length;
      positions.set(`n${node}`, {
        x: cx + ring.depth * ringGap * Math.cos(angle),
        y: cy + ring.depth * ringGap * Math.sin(angle),
      });
    });
  }
  return positions;
}

/** Andrew's monotone chain; degenerate inputs are padded into visible hulls. */
export function convexHull(points: Point[], pad = 14): Point[] {
  if (points.length === 0) return [];
  const sorted = [...points].sort((a, b) => a.x - b.x || a.y - b.y);
  const cross = (o: Point, a: Point, b: Point) =>
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  const lower: Point[] = [];
  for (const p of sorted) {
    while (lower.length >= 2 && cross(lower[lower.length - 2], lower[lower.length - 1], p) <= 0)
      lower.pop();
    lower.push(p);
  }
  const upper: Point[] = [];
  for (const p of [...sorted].reverse()) {
    while (upper.length >= 2 && cross(upper[upper.length - 2], upper[upper.length - 1], p) <= 0)
      upper.pop();
    upper.push(p);
  }
  let hull = lower.slice(0, -1).concat(upper.slice(0, -1));
  if (hull.length === 0) hull = [sorted[0]];
  // pad outward from the centroid so 1- and 2-point communities still show a hull
  const cx = hull.reduce((s, p) => s + p.x, 0) / hull.length;
  const cy = hull.reduce((s, p) => s + p.y, 0) / hull.length;
  if (hull.length < 3) {
    return hull.flatMap((p) => [
      { x: p.x - pad, y: p.y - pad },
      { x: p.x + pad, y: p.y - pad },
      { x: p.x + pad, y: p.y + pad },
      { x: p.x - pad, y: p.y + pad },
    ]);
  }
  return hull.map((p) => {
    const ex = p.x - cx;
    const ey = p.y - cy;
    const len = Math.sqrt(ex * ex + ey * ey) || 1;
    return { x: p.x + (ex / len) * pad, y: p.y + (ey / len) * pad };
  });
}

export interface CommunityHull {
  community: number;
  outline: Point[];
}

/** One hull per expanded community, from the server view + layout positions. */
export function communityHulls(view: ViewGraphPayload, positions: Positions): CommunityHull[] {
  return view.expanded_communities.map((community) => {
    const members = view.expanded_members[String(community)] ?? [];
    const points = members
      .map((node) => positions.get(`n${node}`))
      .filter((p): p is Point => p !== undefined);
    return { community, outline: convexHull(points) };
  });
}

/** 1-hop neighbors of a node among the visible node edges (hover highlight). */
export function neighborsOf(view: ViewGraphPayload, node: number): Set<number> {
  const out = new Set<number>();
  for (const e of view.node_edges) {
    if (e.src === node) out.add(e.dst);
    if (e.dst === node) out.add(e.src);
  }
  return out;
}

/** Substring search over visible node ids ("textual keys"). */
export function searchNodes(view: ViewGraphPayload, query: string): number[] {
  const needle = query.trim();
  if (!needle) return [];
  return view.expanded_nodes.filter((id) => String(id).includes(needle));
}
