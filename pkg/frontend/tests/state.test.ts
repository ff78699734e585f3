import { describe, expect, it } from "vitest";

import { EditError, StudioState } from "../src/state";
import type { GraphDocument, SceneResponse } from "../src/types";

function threeNodeGraph(): GraphDocument {
  return {
    id: "g",
    nodes: [
      { id: 0, category: "bed" },
      { id: 1, category: "lamp" },
      { id: 2, category: "stool" },
    ],
    edges: [
      { subject: 1, predicate: "left of", object: 0 },
      { subject: 2, predicate: "behind of", object: 0 },
    ],
  };
}

function fakeScene(): SceneResponse {
  return {
    layouts: [],
    report: {
      per_relation: {},
      column_accuracy: {},
      easy_mean: null,
      hard_mean: null,
      msg_macro: null,
      msg_micro: null,
      checked_edges: 0,
      satisfied_edges: 0,
      skipped_edges: 0,
      close_mode: "min_pair",
      symmetry_mode: "matched_mean",
    },
    edges: [],
    collisions: { pairs: [], volume: 0 },
  };
}

describe("graph editing", () => {
  it("builds a document from scratch", () => {
    const s = new StudioState();
    expect(s.addNode("bed")).toBe(0);
    expect(s.addNode("nightstand")).toBe(1);
    expect(s.addEdge(1, "left of", 0)).toBe(0);
    expect(s.serialize()).toEqual({
      id: "studio-scene",
      nodes: [
        { id: 0, category: "bed" },
        { id: 1, category: "nightstand" },
      ],
      edges: [{ subject: 1, predicate: "left of", object: 0 }],
    });
  });

  it("serialize returns a copy, not the live graph", () => {
    const s = new StudioState(threeNodeGraph());
    const doc = s.serialize();
    doc.nodes[0]!.category = "sofa";
    expect(s.graph.nodes[0]!.category).toBe("bed");
  });

  it("removing a node drops incident edges and keeps ids dense", () => {
    const s = new StudioState(threeNodeGraph());
    s.removeNode(1);
    expect(s.serialize()).toEqual({
      id: "g",
      nodes: [
        { id: 0, category: "bed" },
        { id: 1, category: "stool" },
      ],
      edges: [{ subject: 1, predicate: "behind of", object: 0 }],
    });
  });

  it("setCategory renames in place", () => {
    const s = new StudioState(threeNodeGraph());
    s.setCategory(2, "wardrobe");
    expect(s.graph.nodes[2]!.category).toBe("wardrobe");
  });

  it("removeEdge returns the removed edge", () => {
    const s = new StudioState(threeNodeGraph());
    const gone = s.removeEdge(0);
    expect(gone).toEqual({ subject: 1, predicate: "left of", object: 0 });
    expect(s.graph.edges).toHaveLength(1);
  });
});

describe("edit validation", () => {
  it.each([
    ["edge to a missing node", (s: StudioState) => s.addEdge(0, "left of", 9)],
    ["edge from a missing node", (s: StudioState) => s.addEdge(9, "left of", 0)],
    ["self edge", (s: StudioState) => s.addEdge(0, "left of", 0)],
    ["empty predicate", (s: StudioState) => s.addEdge(0, "", 1)],
    ["removing a missing node", (s: StudioState) => s.removeNode(7)],
    ["renaming a missing node", (s: StudioState) => s.setCategory(7, "sofa")],
    ["removing a missing edge", (s: StudioState) => s.removeEdge(5)],
  ])("rejects %s and leaves the graph unchanged", (_name, bad) => {
    const s = new StudioState(threeNodeGraph());
    const before = s.serialize();
    expect(() => bad(s)).toThrow(EditError);
    expect(s.serialize()).toEqual(before);
    expect(s.canUndo).toBe(false);
  });
});

describe("undo", () => {
  it("restores the exact prior document through a chain of edits", () => {
    const s = new StudioState(threeNodeGraph());
    const original = s.serialize();
    s.addNode("sofa");
    const afterAdd = s.serialize();
    s.addEdge(3, "close by", 0);
    s.removeNode(1);
    expect(s.serialize()).not.toEqual(original);

    s.undo();
    s.undo();
    expect(s.serialize()).toEqual(afterAdd);
    s.undo();
    expect(s.serialize()).toEqual(original);
    expect(s.canUndo).toBe(false);
    expect(() => s.undo()).toThrow(EditError);
  });
});

describe("staleness", () => {
  it("edits before any result never mark stale", () => {
    const s = new StudioState();
    s.addNode("bed");
    expect(s.stale).toBe(false);
  });

  it("edits after a result mark it stale until the next result lands", () => {
    const s = new StudioState(threeNodeGraph());
    s.applyScene(fakeScene());
    expect(s.stale).toBe(false);
    s.addNode("sofa");
    expect(s.stale).toBe(true);
    s.applyScene(fakeScene());
    expect(s.stale).toBe(false);
  });

  it("undo after a result also marks stale", () => {
    const s = new StudioState(threeNodeGraph());
    s.addNode("sofa");
    s.applyScene(fakeScene());
    s.undo();
    expect(s.stale).toBe(true);
  });
});
