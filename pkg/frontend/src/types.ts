/** JSON shapes shared with the engine's HTTP API. */

export interface SceneNode {
  id: number;
  category: string;
}

export interface SceneEdge {
  subject: number;
  predicate: string;
  object: number;
}

/** The document POSTed as `graph`; ids must be dense from zero. */
export interface GraphDocument {
  id: string;
  nodes: SceneNode[];
  edges: SceneEdge[];
}

/** One 7-DoF box as the service returns it. */
export interface LayoutEntry {
  node: number;
  /** [width, length, height, cx, cy, cz]; z is the bottom face. */
  box: [number, number, number, number, number, number];
  angle_bin: number;
  angle_deg: number;
}

export type EdgeStatus = "satisfied" | "violated" | "skipped";

export interface EdgeVerdict {
  index: number;
  subject: number;
  predicate: string;
  object: number;
  status: EdgeStatus;
}

export interface ConsistencyReportJson {
  per_relation: Record<string, { checked: number; satisfied: number; accuracy: number | null }>;
  column_accuracy: Record<string, number>;
  easy_mean: number | null;
  hard_mean: number | null;
  msg_macro: number | null;
  msg_micro: number | null;
  checked_edges: number;
  satisfied_edges: number;
  skipped_edges: number;
  close_mode: string;
  symmetry_mode: string;
}

export interface SceneResponse {
  layouts: LayoutEntry[];
  report: ConsistencyReportJson;
  edges: EdgeVerdict[];
  collisions: { pairs: [number, number][]; volume: number };
  seed?: number;
  shape_code_dim?: number;
  feasible?: boolean;
  message?: string;
  iterations?: number;
  objective?: number;
}

export interface VocabResponse {
  objects: string[];
  relations: { name: string; tier: string | null }[];
}

export interface SolverOverrides {
  max_iters?: number;
  step_size?: number;
  overlap_weight?: number;
  seed?: number;
}
