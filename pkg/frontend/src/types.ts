/** Server payload shapes (mirrors the session service JSON formats). */

export interface GraphNode {
  id: number;
  attrs: Record<string, number>;
}

export interface GraphEdge {
  src: number;
  dst: number;
  weight: number;
  by_type: Record<string, number>;
}

export interface GraphPayload {
  directed: boolean;
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface MacroNodePayload {
  community: number;
  size: number;
  boundary: number[];
  boundary_omitted: number;
}

export type EndpointRef = { kind: "node" | "macro"; id: number };

export interface MacroEdgePayload {
  src: EndpointRef;
  dst: EndpointRef;
  weight: number;
}

export interface ViewGraphPayload {
  expanded_communities: number[];
  expanded_nodes: number[];
  expanded_members: Record<string, number[]>;
  node_edges: { src: number; dst: number; weight: number }[];
  macro_nodes: MacroNodePayload[];
  macro_edges: MacroEdgePayload[];
  selected: number | null;
  hops: number;
  warnings: string[];
}

export interface JobStatus {
  id: string;
  kind: string;
  state: "PENDING" | "RUNNING" | "DONE" | "FAILED" | "CANCELLED";
  progress: { done: number; total: number };
  error: string | null;
}

export interface EventPointPayload {
  day: string;
  hour: number;
  type: string;
  src: number | string;
  dst: number | string;
}

export interface EventsPayload {
  points: EventPointPayload[];
}

export interface SeriesPayload {
  grouping: string;
  bins: { start: string; width_seconds: number }[];
  rows: Record<string, number[]>;
}

export interface DendrogramPayload {
  merges: { a: number; b: number; dq: number; q: number }[];
  best_cut: number;
}

export interface DatasetSummary {
  record_count: number;
  counts_by_type: Record<string, number>;
  span: [string, string] | null;
  distinct_identifiers: number;
  dropped_rows: number;
  drop_reasons: Record<string, number>;
  duplicates_collapsed: number;
}

export interface EditReport {
  ok: boolean;
  q: number;
  contributions: number[];
}
