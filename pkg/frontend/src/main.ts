/**
 * Browser bootstrap: wires the view model to the DOM. Upload a CDR CSV,
 * open a session, run clustering jobs, then explore with the hop stepper,
 * granularity controls, time slider, search, and the temporal panels.
 */

import { ApiClient, HttpTransport } from "./api.js";
import { searchNodes } from "./layout.js";
import { renderHistogram, renderScatter } from "./panels.js";
import { renderNodeLink, renderRadial } from "./render.js";
import { SessionViewModel } from "./viewmodel.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text) node.textContent = text;
  return node;
}

function button(label: string, onClick: () => void): HTMLButtonElement {
  const b = el("button", {}, label);
  b.addEventListener("click", onClick);
  return b;
}

async function start(): Promise<void> {
  const api = new ApiClient(new HttpTransport(""));
  const root = document.getElementById("app");
  if (!root) return;

  const toolbar = el("div", { class: "toolbar" });
  const status = el("span", { class: "status" }, "upload a CDR CSV to begin");
  const fileInput = el("input", { type: "file", accept: ".csv" });
  const canvas = el("div", { class: "canvas" });
  const panels = el("div", { class: "panels" });
  root.append(toolbar, canvas, panels);

  let vm: SessionViewModel | null = null;
  let radialMode = false;

  const redraw = () => {
    if (!vm) return;
    canvas.innerHTML = "";
    if (vm.viewGraph) {
      const scene =
        radialMode && vm.selected !== null
          ? renderRadial(vm.viewGraph, vm.selected)
          : renderNodeLink(vm.viewGraph, { seed: 42 });
      canvas.innerHTML = scene.svg;
      canvas.querySelectorAll<SVGCircleElement>("circle.node").forEach((circle) => {
        circle.addEventListener("click", () => {
          void vm!.select(Number(circle.dataset.id)).then(() => vm!.refreshView());
        });
      });
      const warn = vm.viewGraph.warnings.join(", ");
      status.textContent = warn ? `warnings: ${warn}` : `hops=${vm.sliders.hops}`;
    }
    panels.innerHTML = "";
    if (vm.events) {
      const box = el("div", { class: "panel" });
      box.append(el("h3", {}, "time flow"));
      box.insertAdjacentHTML("beforeend", renderScatter(vm.events));
      panels.append(box);
    }
    if (vm.series) {
      const box = el("div", { class: "panel" });
      box.append(el("h3", {}, "activity"));
      box.insertAdjacentHTML("beforeend", renderHistogram(vm.series));
      panels.append(box);
    }
  };

  fileInput.addEventListener("change", async () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    status.textContent = "uploading...";
    const { dataset_id, summary } = await api.uploadDataset(await file.text());
    const { session_id } = await api.createSession(dataset_id);
    vm = new SessionViewModel(api, session_id);
    vm.onChange(redraw);
    status.textContent = `${summary.record_count} records, ${summary.distinct_identifiers} identifiers`;
    await vm.refreshGraph();
    await vm.loadEvents();
    await vm.loadSeries();
  });

  const hopsLabel = el("span", {}, "hops: 0");
  toolbar.append(
    fileInput,
    button("cluster (greedy)", async () => {
      if (!vm) return;
      status.textContent = "merging...";
      await vm.runJob("cnm");
      await vm.cutMaxQ();
      await vm.refreshView();
    }),
    button("cluster (divisive)", async () => {
      if (!vm) return;
      status.textContent = "tracing deletions...";
      await vm.runJob("gn", { stop: "exhaust" });
      status.textContent = "trace ready; pick a deletion count";
    }),
    button("Q max", async () => {
      if (!vm) return;
      await vm.cutMaxQ();
      await vm.refreshView();
    }),
    button("Q max - 1", async () => {
      if (!vm) return;
      await vm.cutMaxQ(1);
      await vm.refreshView();
    }),
    button("hops -", async () => {
      if (!vm || vm.sliders.hops === 0) return;
      await vm.hops(vm.sliders.hops - 1);
      await vm.refreshView();
      hopsLabel.textContent = `hops: ${vm.sliders.hops}`;
    }),
    button("hops +", async () => {
      if (!vm) return;
      await vm.hops(vm.sliders.hops + 1);
      await vm.refreshView();
      hopsLabel.textContent = `hops: ${vm.sliders.hops}`;
    }),
    hopsLabel,
    button("radial", () => {
      radialMode = !radialMode;
      redraw();
    }),
  );

  const windowFrom = el("input", { type: "datetime-local", step: "1" });
  const windowTo = el("input", { type: "datetime-local", step: "1" });
  toolbar.append(
    windowFrom,
    windowTo,
    button("apply window", async () => {
      if (!vm || !windowFrom.value || !windowTo.value) return;
      const range = `${windowFrom.value}:00Z..${windowTo.value}:00Z`;
      await vm.window(range);
      await vm.refreshGraph();
      await vm.loadEvents();
      await vm.loadSeries();
      await vm.refreshView().catch(() => undefined);
    }),
    button("clear window", async () => {
      if (!vm) return;
      await vm.window(null);
      await vm.refreshGraph();
      await vm.refreshView().catch(() => undefined);
    }),
  );

  const search = el("input", { type: "search", placeholder: "find node id" });
  search.addEventListener("change", async () => {
    if (!vm?.viewGraph) return;
    const hits = searchNodes(vm.viewGraph, search.value);
    if (hits.length > 0) {
      await vm.select(hits[0]);
      await vm.refreshView();
    }
  });
  toolbar.append(search, status);
}

void start();
