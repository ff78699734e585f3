/** SVG rendering of layout boxes and the edge verdict list.
 *
 * Orthographic painter's algorithm: project the 8 corners of every box,
 * sort faces far-to-near, emit shaded quads plus a wireframe and a category
 * label. No WebGL so the whole pipeline runs under DOM-only test hosts.
 */

import type { Camera } from "./state";
import type { EdgeVerdict, GraphDocument, LayoutEntry } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";

// corner order: 4 bottom counter-clockwise from (-x, -y), then the 4 tops
const FACES: readonly (readonly [number, number, number, number])[] = [
  [0, 1, 2, 3], // bottom
  [4, 5, 6, 7], // top
  [0, 1, 5, 4],
  [1, 2, 6, 5],
  [2, 3, 7, 6],
  [3, 0, 4, 7],
];

const FACE_FILL = "#7e9cc4";
const EDGE_COLORS: Record<string, string> = {
  satisfied: "#1a7f37",
  violated: "#c62828",
  skipped: "#757575",
  unchecked: "#9e9e9e",
};

export function boxCorners(entry: LayoutEntry): [number, number, number][] {
  const [w, l, h, cx, cy, cz] = entry.box;
  const rad = (entry.angle_deg * Math.PI) / 180;
  const cos = Math.cos(rad);
  const sin = Math.sin(rad);
  const locals: [number, number][] = [
    [-w / 2, -l / 2],
    [w / 2, -l / 2],
    [w / 2, l / 2],
    [-w / 2, l / 2],
  ];
  const corners: [number, number, number][] = [];
  for (const z of [0, h]) {
    for (const [x, y] of locals) {
      corners.push([cx + x * cos - y * sin, cy + x * sin + y * cos, cz + z]);
    }
  }
  return corners;
}

interface Projected {
  x: number;
  y: number;
  depth: number;
}

export function project(point: [number, number, number], camera: Camera): Projected {
  const yaw = (camera.yawDeg * Math.PI) / 180;
  const tilt = ((camera.mode === "top" ? 90 : camera.elevationDeg) * Math.PI) / 180;
  const [x, y, z] = point;
  const spin = camera.mode === "top" ? 0 : yaw;
  const xr = x * Math.cos(spin) + y * Math.sin(spin);
  const yr = -x * Math.sin(spin) + y * Math.cos(spin);
  return {
    x: xr,
    y: -(yr * Math.sin(tilt) + z * Math.cos(tilt)),
    depth: yr * Math.cos(tilt) - z * Math.sin(tilt),
  };
}

function polygon(points: Projected[], cls: string, stroke: string, fill: string): SVGElement {
  const el = document.createElementNS(SVG_NS, "polygon");
  el.setAttribute("class", cls);
  el.setAttribute("points", points.map((p) => `${p.x.toFixed(3)},${p.y.toFixed(3)}`).join(" "));
  el.setAttribute("fill", fill);
  el.setAttribute("fill-opacity", "0.35");
  el.setAttribute("stroke", stroke);
  el.setAttribute("stroke-width", "0.02");
  return el;
}

/** Replace the SVG's content with the scene; collision pairs outline red. */
export function renderScene(
  svg: SVGSVGElement,
  layouts: LayoutEntry[],
  collisionPairs: [number, number][],
  categories: Map<number, string>,
  camera: Camera,
): void {
  svg.textContent = "";
  const collided = new Set<number>();
  for (const [i, j] of collisionPairs) {
    collided.add(i);
    collided.add(j);
  }

  const groups: { el: SVGElement; depth: number }[] = [];
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;

  layouts.forEach((entry, index) => {
    const corners = boxCorners(entry).map((c) => project(c, camera));
    for (const p of corners) {
      minX = Math.min(minX, p.x);
      minY = Math.min(minY, p.y);
      maxX = Math.max(maxX, p.x);
      maxY = Math.max(maxY, p.y);
    }
    const hit = collided.has(index);
    const group = document.createElementNS(SVG_NS, "g");
    group.setAttribute("class", hit ? "box collided" : "box");
    group.setAttribute("data-node", String(entry.node));
    const stroke = hit ? EDGE_COLORS.violated! : "#263238";
    const faces = FACES.map((quad) => ({
      quad,
      depth: quad.reduce((acc, c) => acc + corners[c]!.depth, 0) / 4,
    }));
    // larger depth lies farther along the view axis; paint far faces first
    faces.sort((a, b) => b.depth - a.depth);
    for (const face of faces) {
      group.appendChild(
        polygon(
          face.quad.map((c) => corners[c]!),
          "face",
          stroke,
          hit ? "#ef9a9a" : FACE_FILL,
        ),
      );
    }
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("class", "label");
    const top = corners[4]!;
    label.setAttribute("x", top.x.toFixed(3));
    label.setAttribute("y", (top.y - 0.08).toFixed(3));
    label.setAttribute("font-size", "0.18");
    label.textContent = categories.get(entry.node) ?? `node ${entry.node}`;
    group.appendChild(label);
    const depth = corners.reduce((acc, p) => acc + p.depth, 0) / corners.length;
    groups.push({ el: group, depth });
  });

  groups.sort((a, b) => b.depth - a.depth);
  for (const g of groups) svg.appendChild(g.el);

  if (layouts.length > 0) {
    const pad = 0.5;
    svg.setAttribute(
      "viewBox",
      `${(minX - pad).toFixed(3)} ${(minY - pad).toFixed(3)} ` +
        `${(maxX - minX + 2 * pad).toFixed(3)} ${(maxY - minY + 2 * pad).toFixed(3)}`,
    );
  }
}

/** Rebuild the edge list; status classes and colors come from the engine's
 * verdicts (or "unchecked" before any result exists). */
export function renderEdgeList(
  list: HTMLElement,
  graph: GraphDocument,
  verdicts: EdgeVerdict[] | null,
): void {
  list.textContent = "";
  const names = new Map(graph.nodes.map((n) => [n.id, n.category]));
  graph.edges.forEach((edge, index) => {
    const status = verdicts?.[index]?.status ?? "unchecked";
    const item = document.createElement("li");
    item.setAttribute("class", `edge ${status}`);
    item.setAttribute("data-index", String(index));
    item.style.color = EDGE_COLORS[status] ?? EDGE_COLORS.unchecked!;
    item.textContent =
      `${names.get(edge.subject) ?? edge.subject} ${edge.predicate} ` +
      `${names.get(edge.object) ?? edge.object} [${status}]`;
    list.appendChild(item);
  });
}
