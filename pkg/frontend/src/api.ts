/**
 * Session-service client. One method per endpoint; every request passes
 * through a pluggable transport and is appended to the call log, so tests
 * can replay a recorded session and assert the exact wire traffic.
 */

import type {
  DatasetSummary,
  DendrogramPayload,
  EditReport,
  EventsPayload,
  GraphPayload,
  JobStatus,
  SeriesPayload,
  ViewGraphPayload,
} from "./types.js";

export interface Transport {
  request(method: string, path: string, body?: unknown): Promise<unknown>;
}

export interface LoggedCall {
  method: string;
  path: string;
  body?: unknown;
}

/** fetch()-based transport for the real service. */
export class HttpTransport implements Transport {
  constructor(
    private baseUrl: string,
    private token: string | null = null,
  ) {}

  async request(method: string, path: string, body?: unknown): Promise<unknown> {
    // string bodies are raw uploads (CSV); everything else is JSON
    const raw = typeof body === "string";
    const headers: Record<string, string> = {
      "content-type": raw ? "text/csv" : "application/json",
    };
    if (this.token) headers["x-auth-token"] = this.token;
    const response = await fetch(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : raw ? (body as string) : JSON.stringify(body),
    });
    if (!response.ok) {
      throw new Error(`${method} ${path} -> ${response.status}: ${await response.text()}`);
    }
    return response.json();
  }
}

export class ApiClient {
  readonly calls: LoggedCall[] = [];

  constructor(private transport: Transport) {}

  private call<T>(method: string, path: string, body?: unknown): Promise<T> {
    this.calls.push(body === undefined ? { method, path } : { method, path, body });
    return this.transport.request(method, path, body) as Promise<T>;
  }

  uploadDataset(csv: string): Promise<{ dataset_id: string; summary: DatasetSummary }> {
    return this.call("POST", "/datasets", csv);
  }

  createSession(datasetId: string): Promise<{ session_id: string }> {
    return this.call("POST", "/sessions", { dataset_id: datasetId });
  }

  getGraph(sid: string): Promise<GraphPayload> {
    return this.call("GET", `/sessions/${sid}/graph`);
  }

  startJob(sid: string, kind: "metrics" | "gn" | "cnm", params: object = {}): Promise<{ job_id: string }> {
    return this.call("POST", `/sessions/${sid}/jobs/${kind}`, params);
  }

  jobStatus(sid: string, jobId: string): Promise<JobStatus> {
    return this.call("GET", `/sessions/${sid}/jobs/${jobId}`);
  }

  cancelJob(sid: string, jobId: string): Promise<JobStatus> {
    return this.call("DELETE", `/sessions/${sid}/jobs/${jobId}`);
  }

  setGranularity(sid: string, body: { rule?: string; deletions?: number }): Promise<{ ok: boolean }> {
    return this.call("POST", `/sessions/${sid}/view/granularity`, body);
  }

  setHops(sid: string, k: number, overrides?: { force_expanded?: number[]; force_collapsed?: number[] }): Promise<{ ok: boolean }> {
    const body = overrides ? { k, ...overrides } : { k };
    return this.call("POST", `/sessions/${sid}/view/hops`, body);
  }

  selectNode(sid: string, node: number | null): Promise<{ ok: boolean }> {
    return this.call("POST", `/sessions/${sid}/view/select`, { node });
  }

  setWindow(sid: string, window: string | null): Promise<{ ok: boolean }> {
    return this.call("POST", `/sessions/${sid}/view/window`, { window });
  }

  editPartition(
    sid: string,
    body:
      | { action: "merge"; ids: number[] }
      | { action: "split"; id: number; method?: string }
      | { action: "unmerge"; id: number },
  ): Promise<EditReport> {
    return this.call("POST", `/sessions/${sid}/view/edit`, body);
  }

  getView(sid: string): Promise<ViewGraphPayload> {
    return this.call("GET", `/sessions/${sid}/view`);
  }

  getEvents(sid: string): Promise<EventsPayload> {
    return this.call("GET", `/sessions/${sid}/temporal/events`);
  }

  getSeries(sid: string, grouping: "node" | "community" = "node"): Promise<SeriesPayload> {
    return this.call("GET", `/sessions/${sid}/temporal/series?grouping=${grouping}`);
  }

  getDendrogram(sid: string): Promise<DendrogramPayload> {
    return this.call("GET", `/sessions/${sid}/export/json?what=dendrogram`);
  }
}
