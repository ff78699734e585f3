/** Editable scene state: the graph being built, the last engine answer, and
 * an undo stack of exact snapshots.
 *
 * Node ids stay dense (0..n-1) through every edit because the engine's
 * schema requires it; removing a node renumbers the ones above it and drops
 * its incident edges. All verdict/collision data is whatever the engine last
 * said: nothing here re-derives geometry.
 */

import type { GraphDocument, SceneEdge, SceneResponse } from "./types";

export class EditError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "EditError";
  }
}

export type CameraMode = "top" | "orbit";

export interface Camera {
  mode: CameraMode;
  yawDeg: number;
  elevationDeg: number;
}

export interface Selection {
  node: number | null;
  edge: number | null;
}

function deepCopy<T>(value: T): T {
  return JSON.parse(JSON.stringify(value)) as T;
}

export class StudioState {
  graph: GraphDocument;
  lastScene: SceneResponse | null = null;
  /** True when the graph changed after the last scene came back. */
  stale = false;
  camera: Camera = { mode: "top", yawDeg: 35, elevationDeg: 30 };
  selection: Selection = { node: null, edge: null };
  private undoStack: GraphDocument[] = [];

  constructor(graph?: GraphDocument) {
    this.graph = graph ? deepCopy(graph) : { id: "studio-scene", nodes: [], edges: [] };
  }

  serialize(): GraphDocument {
    return deepCopy(this.graph);
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  private push(): void {
    this.undoStack.push(deepCopy(this.graph));
  }

  undo(): void {
    const prior = this.undoStack.pop();
    if (!prior) throw new EditError("nothing to undo");
    this.graph = prior;
    this.selection = { node: null, edge: null };
    this.markEdited();
  }

  private markEdited(): void {
    if (this.lastScene !== null) this.stale = true;
  }

  private requireNode(id: number, what: string): void {
    if (!this.graph.nodes.some((n) => n.id === id)) {
      throw new EditError(`${what} references missing node ${id}`);
    }
  }

  addNode(category: string): number {
    if (!category) throw new EditError("category must be non-empty");
    this.push();
    const id = this.graph.nodes.length;
    this.graph.nodes.push({ id, category });
    this.markEdited();
    return id;
  }

  setCategory(id: number, category: string): void {
    this.requireNode(id, "set_category");
    if (!category) throw new EditError("category must be non-empty");
    this.push();
    const node = this.graph.nodes.find((n) => n.id === id)!;
    node.category = category;
    this.markEdited();
  }

  removeNode(id: number): void {
    this.requireNode(id, "remove_node");
    this.push();
    this.graph.nodes = this.graph.nodes.filter((n) => n.id !== id);
    this.graph.edges = this.graph.edges.filter((e) => e.subject !== id && e.object !== id);
    // close the id gap so the document stays schema-valid
    for (const node of this.graph.nodes) if (node.id > id) node.id -= 1;
    for (const edge of this.graph.edges) {
      if (edge.subject > id) edge.subject -= 1;
      if (edge.object > id) edge.object -= 1;
    }
    this.selection = { node: null, edge: null };
    this.markEdited();
  }

  addEdge(subject: number, predicate: string, object: number): number {
    this.requireNode(subject, "add_edge");
    this.requireNode(object, "add_edge");
    if (subject === object) throw new EditError("an edge cannot relate a node to itself");
    if (!predicate) throw new EditError("predicate must be non-empty");
    this.push();
    this.graph.edges.push({ subject, predicate, object });
    this.markEdited();
    return this.graph.edges.length - 1;
  }

  removeEdge(index: number): SceneEdge {
    const edge = this.graph.edges[index];
    if (edge === undefined) throw new EditError(`no edge at index ${index}`);
    this.push();
    this.graph.edges.splice(index, 1);
    this.markEdited();
    return edge;
  }

  /** Record an engine answer for the graph as currently serialized. */
  applyScene(scene: SceneResponse): void {
    this.lastScene = scene;
    this.stale = false;
  }
}
