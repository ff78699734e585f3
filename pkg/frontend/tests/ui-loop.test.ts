/** End-to-end loop against a live local service: load a three-piece scene,
 * solve, inspect the render and verdicts, break one rule, solve again. */

import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";

import { EngineClient } from "../src/api";
import { createApp } from "../src/app";
import type { AppHandle } from "../src/app";
import { loopFixture, nodeFetch, startEngine } from "./helpers";
import type { RunningEngine } from "./helpers";

let engine: RunningEngine;
let client: EngineClient;

beforeAll(async () => {
  engine = await startEngine();
  client = new EngineClient(engine.baseUrl, nodeFetch);
}, 60_000);

afterAll(async () => {
  if (engine) await engine.stop();
});

function mount(initial = true): AppHandle {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return createApp(root, client, initial ? loopFixture() : undefined);
}

function serialized(app: AppHandle): string {
  return new XMLSerializer().serializeToString(app.elements.svg);
}

describe("solve loop", () => {
  it("renders three clean boxes, then reports the contradiction after an edit", async () => {
    const app = mount();
    await app.ready;
    expect(app.elements.categorySelect.options.length).toBeGreaterThan(30);
    expect(app.elements.predicateSelect.options.length).toBeGreaterThan(10);

    app.elements.seed.value = "5";
    await app.request("solve");

    expect(app.elements.svg.querySelectorAll("g.box")).toHaveLength(3);
    const edges = [...app.elements.edgeList.querySelectorAll("li.edge")];
    expect(edges).toHaveLength(3);
    for (const edge of edges) expect(edge.className).toBe("edge satisfied");
    expect(app.elements.svg.querySelectorAll(".collided")).toHaveLength(0);
    expect(app.state.lastScene?.report.msg_micro).toBe(1.0);
    expect(app.state.lastScene?.feasible).toBe(true);
    expect(app.elements.root.classList.contains("stale")).toBe(false);

    // swap the size rule for a side rule that contradicts the existing one:
    // the nightstand cannot sit on both sides of the bed
    app.state.removeEdge(2);
    app.state.addEdge(1, "right of", 0);
    app.refresh();
    expect(app.elements.root.classList.contains("stale")).toBe(true);
    for (const edge of app.elements.edgeList.querySelectorAll("li.edge")) {
      expect(edge.className).toBe("edge unchecked");
    }

    await app.request("solve");
    expect(app.elements.root.classList.contains("stale")).toBe(false);
    const after = [...app.elements.edgeList.querySelectorAll("li.edge")];
    expect(after).toHaveLength(3);
    expect(after.some((e) => e.className === "edge violated")).toBe(true);
    expect(after.some((e) => e.className === "edge satisfied")).toBe(true);
    const micro = app.state.lastScene?.report.msg_micro;
    expect(micro).not.toBeNull();
    expect(micro!).toBeLessThan(1.0);
    expect(app.state.lastScene?.feasible).toBe(false);
  }, 120_000);

  it("same seed renders identically; a new seed does not", async () => {
    const app = mount();
    await app.ready;
    app.elements.seed.value = "12";
    await app.request("synthesize");
    const first = serialized(app);
    await app.request("synthesize");
    expect(serialized(app)).toBe(first);
    app.elements.seed.value = "13";
    await app.request("synthesize");
    expect(serialized(app)).not.toBe(first);
  }, 120_000);

  it("a rejected request lands in the status bar and keeps the last scene", async () => {
    const app = mount();
    await app.ready;
    app.elements.seed.value = "5";
    await app.request("solve");
    const before = app.state.lastScene;
    app.state.graph.nodes[0]!.category = "flux capacitor";
    await app.request("solve");
    expect(app.elements.status.className).toBe("status error");
    expect(app.elements.status.textContent).toContain("error:");
    expect(app.state.lastScene).toBe(before);
  }, 120_000);

  it("buttons build a scene from nothing and solve it", async () => {
    const app = mount(false);
    await app.ready;
    const { categorySelect, addNodeButton, addEdgeButton } = app.elements;
    const { subjectSelect, predicateSelect, objectSelect } = app.elements;

    categorySelect.value = "bed";
    addNodeButton.click();
    categorySelect.value = "nightstand";
    addNodeButton.click();
    expect(app.state.graph.nodes).toHaveLength(2);
    expect(app.elements.nodeList.querySelectorAll("li.node")).toHaveLength(2);

    subjectSelect.value = "1";
    predicateSelect.value = "left of";
    objectSelect.value = "0";
    addEdgeButton.click();
    expect(app.state.graph.edges).toEqual([{ subject: 1, predicate: "left of", object: 0 }]);

    app.elements.undoButton.click();
    expect(app.state.graph.edges).toHaveLength(0);
    // refresh rebuilt the selects, so pick the endpoints again
    subjectSelect.value = "1";
    predicateSelect.value = "left of";
    objectSelect.value = "0";
    addEdgeButton.click();
    expect(app.state.graph.edges).toHaveLength(1);

    app.elements.seed.value = "3";
    app.elements.solve.click();
    await vi.waitFor(
      () => expect(app.elements.status.textContent).toContain("solve done"),
      { timeout: 90_000, interval: 250 },
    );
    expect(app.elements.svg.querySelectorAll("g.box")).toHaveLength(2);
    expect(app.elements.edgeList.querySelector("li.edge")?.className).toBe("edge satisfied");
  }, 120_000);
});
