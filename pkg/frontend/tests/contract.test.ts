/**
 * UI contract against a recorded fixture session: every rendered count must
 * equal the server payload value, every mutation gesture issues exactly one
 * endpoint call, and replaying the recorded gesture log lands on the
 * identical final view.
 */

import { describe, expect, it } from "vitest";

import { ApiClient, type Transport } from "../src/api.js";
import { communityHulls } from "../src/layout.js";
import { histogramStacks, scatterModel } from "../src/panels.js";
import { renderNodeLink } from "../src/render.js";
import { SessionViewModel, type Gesture } from "../src/viewmodel.js";
import type { EventsPayload, SeriesPayload, ViewGraphPayload } from "../src/types.js";

import fixtureJson from "../fixtures/session_fixture.json";

interface Exchange {
  method: string;
  path: string;
  body: unknown;
  response: unknown;
}

interface Fixture {
  session_id: string;
  exchanges: Exchange[];
  gestures: Gesture[];
  snapshots: {
    view_mid: ViewGraphPayload;
    final_view: ViewGraphPayload;
    graph: unknown;
    events: EventsPayload;
    series: SeriesPayload;
  };
}

const fixture = fixtureJson as unknown as Fixture;

/** Serves the recorded exchanges in order; any deviation fails the test. */
class ReplayTransport implements Transport {
  cursor = 0;

  constructor(private exchanges: Exchange[]) {}

  async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const expected = this.exchanges[this.cursor];
    if (!expected) {
      throw new Error(`unexpected call #${this.cursor}: ${method} ${path}`);
    }
    expect(`${method} ${path}`).toBe(`${expected.method} ${expected.path}`);
    expect(body ?? null).toEqual(expected.body ?? null);
    this.cursor += 1;
    return structuredClone(expected.response);
  }

  done(): boolean {
    return this.cursor === this.exchanges.length;
  }
}

function freshViewModel(): { vm: SessionViewModel; api: ApiClient; transport: ReplayTransport } {
  const transport = new ReplayTransport(fixture.exchanges);
  const api = new ApiClient(transport);
  const vm = new SessionViewModel(api, fixture.session_id, 0);
  return { vm, api, transport };
}

describe("recorded session replay", () => {
  it("reproduces the final view graph exactly", async () => {
    const { vm, transport } = freshViewModel();
    await vm.replay(fixture.gestures);
    expect(transport.done()).toBe(true);
    expect(vm.viewGraph).toEqual(fixture.snapshots.final_view);
  });

  it("issues exactly one endpoint call per mutation gesture", async () => {
    const { vm, api } = freshViewModel();
    const mutationKinds = new Set([
      "cut",
      "deletions",
      "select",
      "hops",
      "window",
      "merge",
      "split",
    ]);
    for (const gesture of fixture.gestures) {
      const before = api.calls.length;
      await vm.replay([gesture]);
      const delta = api.calls.length - before;
      if (mutationKinds.has(gesture.kind)) {
        expect(delta, `${gesture.kind} should be one call`).toBe(1);
        expect(api.calls[before].method).toBe("POST");
      }
    }
  });

  it("keeps slider state in sync with acknowledged mutations", async () => {
    const { vm } = freshViewModel();
    await vm.replay(fixture.gestures);
    expect(vm.sliders.hops).toBe(fixture.snapshots.final_view.hops);
    expect(vm.selected).toBe(fixture.snapshots.final_view.selected);
    expect(vm.sliders.cutRule).toBe("max_q");
    expect(vm.sliders.window).not.toBeNull();
  });
});

describe("rendered counts match server payloads", () => {
  const view = fixture.snapshots.view_mid;

  it("hull count equals expanded community count", () => {
    const scene = renderNodeLink(view, { seed: 7 });
    expect(scene.hulls.length).toBe(view.expanded_communities.length);
    const hulls = communityHulls(view, scene.positions);
    expect(hulls.map((h) => h.community)).toEqual(view.expanded_communities);
    for (const hull of hulls) {
      expect(hull.outline.length).toBeGreaterThan(0);
    }
  });

  it("macro-node count equals server macro nodes", () => {
    const scene = renderNodeLink(view, { seed: 7 });
    const stars = (scene.svg.match(/class="macro"/g) ?? []).length;
    expect(stars).toBe(view.macro_nodes.length);
  });

  it("every original node appears exactly once across the view", () => {
    const total =
      view.expanded_nodes.length +
      view.macro_nodes.reduce((sum, m) => sum + m.size, 0);
    const graph = fixture.snapshots.graph as { nodes: unknown[] };
    expect(total).toBe(graph.nodes.length);
  });

  it("scatter point count equals server event count", () => {
    const points = scatterModel(fixture.snapshots.events);
    expect(points.length).toBe(fixture.snapshots.events.points.length);
  });

  it("histogram bin totals equal server series sums", () => {
    const series = fixture.snapshots.series;
    const { binTotals } = histogramStacks(series);
    const expected = series.bins.map((_, bin) =>
      Object.values(series.rows).reduce((sum, row) => sum + (row[bin] ?? 0), 0),
    );
    expect(binTotals).toEqual(expected);
  });
});

describe("optimistic updates roll back on rejection", () => {
  class RejectingTransport implements Transport {
    async request(): Promise<unknown> {
      throw new Error("server said no");
    }
  }

  it("restores hop and window sliders", async () => {
    const vm = new SessionViewModel(new ApiClient(new RejectingTransport()), "s", 0);
    await expect(vm.hops(3)).rejects.toThrow("server said no");
    expect(vm.sliders.hops).toBe(0);
    await expect(vm.window("a..b")).rejects.toThrow();
    expect(vm.sliders.window).toBeNull();
    await expect(vm.select(5)).rejects.toThrow();
    expect(vm.selected).toBeNull();
  });
});
