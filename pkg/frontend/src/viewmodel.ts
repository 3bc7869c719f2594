/**
 * Single source of truth for the console: server snapshots plus slider
 * state. Every mutation gesture maps to exactly one service call; slider
 * values update optimistically and roll back if the server rejects the
 * mutation, so they always reflect the last acknowledged session state.
 *
 * The view model never computes graph analytics locally — every number it
 * holds came from a server payload.
 */

import type { ApiClient } from "./api.js";
import type {
  EventsPayload,
  GraphPayload,
  JobStatus,
  SeriesPayload,
  ViewGraphPayload,
} from "./types.js";

export interface SliderState {
  hops: number;
  cutRule: string | null;
  gnDeletions: number | null;
  window: string | null;
}

export interface Gesture {
  kind: string;
  args: unknown[];
}

export type Listener = () => void;

export class SessionViewModel {
  graph: GraphPayload | null = null;
  viewGraph: ViewGraphPayload | null = null;
  events: EventsPayload | null = null;
  series: SeriesPayload | null = null;
  selected: number | null = null;
  sliders: SliderState = { hops: 0, cutRule: null, gnDeletions: null, window: null };
  lastJob: JobStatus | null = null;
  readonly gestureLog: Gesture[] = [];

  private listeners: Listener[] = [];
  private inFlight: Promise<unknown> = Promise.resolve();

  constructor(
    private api: ApiClient,
    readonly sessionId: string,
    private pollDelayMs = 50,
  ) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  /** Serialize mutations: at most one in flight, later gestures queue. */
  private enqueue<T>(work: () => Promise<T>): Promise<T> {
    const next = this.inFlight.then(work);
    this.inFlight = next.catch(() => undefined);
    return next;
  }

  // -- reads ----------------------------------------------------------------

  async refreshGraph(): Promise<GraphPayload> {
    this.gestureLog.push({ kind: "refreshGraph", args: [] });
    this.graph = await this.api.getGraph(this.sessionId);
    this.notify();
    return this.graph;
  }

  async refreshView(): Promise<ViewGraphPayload> {
    this.gestureLog.push({ kind: "refreshView", args: [] });
    this.viewGraph = await this.api.getView(this.sessionId);
    this.selected = this.viewGraph.selected;
    this.sliders.hops = this.viewGraph.hops;
    this.notify();
    return this.viewGraph;
  }

  async loadEvents(): Promise<EventsPayload> {
    this.gestureLog.push({ kind: "loadEvents", args: [] });
    this.events = await this.api.getEvents(this.sessionId);
    this.notify();
    return this.events;
  }

  async loadSeries(grouping: "node" | "community" = "node"): Promise<SeriesPayload> {
    this.gestureLog.push({ kind: "loadSeries", args: [] });
    this.series = await this.api.getSeries(this.sessionId, grouping);
    this.notify();
    return this.series;
  }

  // -- mutation gestures (one endpoint call each) -----------------------------

  select(node: number | null): Promise<void> {
    this.gestureLog.push({ kind: "select", args: [node] });
    const previous = this.selected;
    this.selected = node; // optimistic
    return this.enqueue(async () => {
      try {
        await this.api.selectNode(this.sessionId, node);
      } catch (error) {
        this.selected = previous; // rollback
        this.notify();
        throw error;
      }
      this.notify();
    });
  }

  hops(k: number): Promise<void> {
    this.gestureLog.push({ kind: "hops", args: [k] });
    const previous = this.sliders.hops;
    this.sliders.hops = k;
    return this.enqueue(async () => {
      try {
        await this.api.setHops(this.sessionId, k);
      } catch (error) {
        this.sliders.hops = previous;
        this.notify();
        throw error;
      }
      this.notify();
    });
  }

  cut(rule: string): Promise<void> {
    this.gestureLog.push({ kind: "cut", args: [rule] });
    const previous = this.sliders.cutRule;
    this.sliders.cutRule = rule;
    return this.enqueue(async () => {
      try {
        await this.api.setGranularity(this.sessionId, { rule });
      } catch (error) {
        this.sliders.cutRule = previous;
        this.notify();
        throw error;
      }
      this.notify();
    });
  }

  /** Dendrogram stepper: best cut, or j merges before it. */
  cutMaxQ(back = 0): Promise<void> {
    return this.cut(back === 0 ? "max_q" : `max_q_minus=${back}`);
  }

  deletions(count: number): Promise<void> {
    this.gestureLog.push({ kind: "deletions", args: [count] });
    const previous = this.sliders.gnDeletions;
    this.sliders.gnDeletions = count;
    return this.enqueue(async () => {
      try {
        await this.api.setGranularity(this.sessionId, { deletions: count });
      } catch (error) {
        this.sliders.gnDeletions = previous;
        this.notify();
        throw error;
      }
      this.notify();
    });
  }

  window(range: string | null): Promise<void> {
    this.gestureLog.push({ kind: "window", args: [range] });
    const previous = this.sliders.window;
    this.sliders.window = range;
    return this.enqueue(async () => {
      try {
        await this.api.setWindow(this.sessionId, range);
      } catch (error) {
        this.sliders.window = previous;
        this.notify();
        throw error;
      }
      this.notify();
    });
  }

  merge(ids: number[]): Promise<void> {
    this.gestureLog.push({ kind: "merge", args: [ids] });
    return this.enqueue(async () => {
      await this.api.editPartition(this.sessionId, { action: "merge", ids });
      this.notify();
    });
  }

  split(id: number, method = "GN_LOCAL"): Promise<void> {
    this.gestureLog.push({ kind: "split", args: [id, method] });
    return this.enqueue(async () => {
      await this.api.editPartition(this.sessionId, { action: "split", id, method });
      this.notify();
    });
  }

  // -- jobs -------------------------------------------------------------------

  async runJob(kind: "metrics" | "gn" | "cnm", params: object = {}): Promise<JobStatus> {
    this.gestureLog.push({ kind: "runJob", args: [kind] });
    const { job_id } = await this.api.startJob(this.sessionId, kind, params);
    let status = await this.api.jobStatus(this.sessionId, job_id);
    while (status.state === "PENDING" || status.state === "RUNNING") {
      await new Promise((resolve) => setTimeout(resolve, this.pollDelayMs));
      status = await this.api.jobStatus(this.sessionId, job_id);
    }
    this.lastJob = status;
    this.notify();
    return status;
  }

  // -- replay -------------------------------------------------------------------

  /** Re-drive a recorded gesture log; end state must match the recording. */
  async replay(gestures: Gesture[]): Promise<void> {
    for (const gesture of gestures) {
      const args = gesture.args;
      switch (gesture.kind) {
        case "runJob":
          await this.runJob(args[0] as "metrics" | "gn" | "cnm");
          break;
        case "cut":
          await this.cut(args[0] as string);
          break;
        case "deletions":
          await this.deletions(args[0] as number);
          break;
        case "select":
          await this.select(args[0] as number | null);
          break;
        case "hops":
          await this.hops(args[0] as number);
          break;
        case "window":
          await this.window(args[0] as string | null);
          break;
        case "merge":
          await this.merge(args[0] as number[]);
          break;
        case "split":
          await this.split(args[0] as number, args[1] as string | undefined);
          break;
        case "refreshView":
          await this.refreshView();
          break;
        case "refreshGraph":
          await this.refreshGraph();
          break;
        case "loadEvents":
          await this.loadEvents();
          break;
        case "loadSeries":
          await this.loadSeries();
          break;
        default:
          throw new Error(`unknown gesture ${gesture.kind}`);
      }
    }
  }
}
