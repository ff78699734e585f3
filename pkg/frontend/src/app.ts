/** Wires state, client, and renderers into one page.
 *
 * Every geometric or relational verdict shown here came from the engine;
 * the UI only records edits, sends requests, and paints what came back.
 */

import { EngineClient, EngineError, RequestGate } from "./api";
import { renderEdgeList, renderScene } from "./render";
import { EditError, StudioState } from "./state";
import type { CameraMode } from "./state";
import type { GraphDocument, SceneResponse } from "./types";

export type RequestMode = "synthesize" | "solve";

export interface AppElements {
  root: HTMLElement;
  status: HTMLElement;
  seed: HTMLInputElement;
  synthesize: HTMLButtonElement;
  solve: HTMLButtonElement;
  undoButton: HTMLButtonElement;
  cameraSelect: HTMLSelectElement;
  categorySelect: HTMLSelectElement;
  addNodeButton: HTMLButtonElement;
  nodeList: HTMLElement;
  subjectSelect: HTMLSelectElement;
  predicateSelect: HTMLSelectElement;
  objectSelect: HTMLSelectElement;
  addEdgeButton: HTMLButtonElement;
  edgeList: HTMLElement;
  svg: SVGSVGElement;
}

export interface AppHandle {
  state: StudioState;
  elements: AppElements;
  /** Resolves once the vocabulary selects are populated. */
  ready: Promise<void>;
  request(mode: RequestMode): Promise<void>;
  refresh(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.setAttribute("class", cls);
  if (text !== undefined) node.textContent = text;
  return node;
}

function option(value: string, label?: string): HTMLOptionElement {
  const opt = document.createElement("option");
  opt.value = value;
  opt.textContent = label ?? value;
  return opt;
}

export function createApp(
  root: HTMLElement,
  client: EngineClient,
  initial?: GraphDocument,
): AppHandle {
  const state = new StudioState(initial);
  const gate = new RequestGate();
  // the graph each scene answer was computed from, for labels on stale views
  let sceneGraph: GraphDocument | null = initial ? state.serialize() : null;

  root.textContent = "";
  root.setAttribute("class", "studio");

  const toolbar = el("div", "toolbar");
  const seed = el("input") as HTMLInputElement;
  seed.type = "number";
  seed.value = "0";
  seed.setAttribute("class", "seed");
  const synthesize = el("button", "synthesize", "Synthesize");
  const solve = el("button", "solve", "Solve");
  const undoButton = el("button", "undo", "Undo");
  const cameraSelect = el("select", "camera") as HTMLSelectElement;
  cameraSelect.append(option("top"), option("orbit"));
  toolbar.append(el("span", undefined, "seed"), seed, synthesize, solve, undoButton, cameraSelect);

  const status = el("div", "status idle", "ready");

  const editor = el("div", "editor");
  const categorySelect = el("select", "category") as HTMLSelectElement;
  const addNodeButton = el("button", "add-node", "Add node");
  const nodeList = el("ul", "nodes");
  const subjectSelect = el("select", "subject") as HTMLSelectElement;
  const predicateSelect = el("select", "predicate") as HTMLSelectElement;
  const objectSelect = el("select", "object") as HTMLSelectElement;
  const addEdgeButton = el("button", "add-edge", "Add edge");
  editor.append(
    categorySelect,
    addNodeButton,
    nodeList,
    subjectSelect,
    predicateSelect,
    objectSelect,
    addEdgeButton,
  );

  const edgeList = el("ul", "edges");
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg") as SVGSVGElement;
  svg.setAttribute("class", "scene");

  root.append(toolbar, status, editor, edgeList, svg);

  const elements: AppElements = {
    root,
    status,
    seed,
    synthesize,
    solve,
    undoButton,
    cameraSelect,
    categorySelect,
    addNodeButton,
    nodeList,
    subjectSelect,
    predicateSelect,
    objectSelect,
    addEdgeButton,
    edgeList,
    svg,
  };

  function setStatus(kind: "idle" | "busy" | "error", text: string): void {
    status.setAttribute("class", `status ${kind}`);
    status.textContent = text;
  }

  function refreshNodeControls(): void {
    nodeList.textContent = "";
    subjectSelect.textContent = "";
    objectSelect.textContent = "";
    for (const node of state.graph.nodes) {
      const item = el("li", "node", `${node.id} ${node.category}`);
      item.setAttribute("data-id", String(node.id));
      const remove = el("button", "remove-node", "remove");
      remove.addEventListener("click", () => {
        mutate(() => state.removeNode(node.id));
      });
      item.appendChild(remove);
      nodeList.appendChild(item);
      const label = `${node.id} ${node.category}`;
      subjectSelect.appendChild(option(String(node.id), label));
      objectSelect.appendChild(option(String(node.id), label));
    }
  }

  function refresh(): void {
    root.classList.toggle("stale", state.stale);
    refreshNodeControls();
    // verdicts index the edges that were sent, so a stale graph shows its
    // edges as unchecked rather than borrowing old statuses
    const verdicts = state.stale ? null : (state.lastScene?.edges ?? null);
    renderEdgeList(edgeList, state.graph, verdicts);
    const scene = state.lastScene;
    if (scene) {
      const source = sceneGraph ?? state.graph;
      const categories = new Map(source.nodes.map((n) => [n.id, n.category]));
      renderScene(svg, scene.layouts, scene.collisions.pairs, categories, state.camera);
    } else {
      svg.textContent = "";
    }
  }

  function mutate(edit: () => unknown): void {
    try {
      edit();
      setStatus("idle", state.stale ? "edited; results are stale" : "ready");
    } catch (err) {
      if (err instanceof EditError) {
        setStatus("error", `error: ${err.message}`);
        return;
      }
      throw err;
    }
    refresh();
  }

  function readSeed(): number | undefined {
    const raw = seed.value.trim();
    if (raw === "") return undefined;
    const parsed = Number(raw);
    return Number.isInteger(parsed) ? parsed : undefined;
  }

  async function request(mode: RequestMode): Promise<void> {
    const graph = state.serialize();
    const ticket = gate.begin("scene");
    setStatus("busy", `${mode} running`);
    let scene: SceneResponse;
    try {
      scene =
        mode === "synthesize"
          ? await client.synthesize(graph, readSeed())
          : await client.solve(graph, readSeed());
    } catch (err) {
      if (!gate.isCurrent("scene", ticket)) return;
      if (err instanceof EngineError) {
        setStatus("error", `error: ${err.message}`);
        return;
      }
      throw err;
    }
    if (!gate.isCurrent("scene", ticket)) return;
    state.applyScene(scene);
    sceneGraph = graph;
    const micro = scene.report.msg_micro;
    const note = micro === null ? "no checkable edges" : `msg_micro ${micro.toFixed(3)}`;
    setStatus("idle", `${mode} done; ${note}`);
    refresh();
  }

  synthesize.addEventListener("click", () => {
    void request("synthesize");
  });
  solve.addEventListener("click", () => {
    void request("solve");
  });
  undoButton.addEventListener("click", () => {
    mutate(() => state.undo());
  });
  cameraSelect.addEventListener("change", () => {
    state.camera.mode = cameraSelect.value as CameraMode;
    refresh();
  });
  addNodeButton.addEventListener("click", () => {
    mutate(() => state.addNode(categorySelect.value));
  });
  addEdgeButton.addEventListener("click", () => {
    mutate(() =>
      state.addEdge(
        Number(subjectSelect.value),
        predicateSelect.value,
        Number(objectSelect.value),
      ),
    );
  });

  const ready = (async () => {
    try {
      const vocab = await client.vocab();
      categorySelect.textContent = "";
      predicateSelect.textContent = "";
      for (const name of vocab.objects) categorySelect.appendChild(option(name));
      for (const rel of vocab.relations) predicateSelect.appendChild(option(rel.name));
    } catch (err) {
      const detail = err instanceof EngineError ? err.message : String(err);
      setStatus("error", `error: ${detail}`);
    }
  })();

  refresh();
  return { state, elements, ready, request, refresh };
}
