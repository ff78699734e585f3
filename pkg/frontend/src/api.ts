/** Typed client for the engine service, with injectable transport. */

import type {
  GraphDocument,
  SceneResponse,
  SolverOverrides,
  VocabResponse,
} from "./types";

/** The slice of fetch the client needs; lets tests and non-browser hosts
 * substitute their own transport. */
export interface HttpResponseLike {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<HttpResponseLike>;

/** Error body the service emits for rejected requests. */
export class EngineError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly path?: string,
  ) {
    super(message);
    this.name = "EngineError";
  }
}

function defaultFetch(): FetchLike {
  const f = (globalThis as { fetch?: unknown }).fetch;
  if (typeof f !== "function") {
    throw new Error("no fetch available; pass a FetchLike to EngineClient");
  }
  return f.bind(globalThis) as FetchLike;
}

export class EngineClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? defaultFetch();
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: HttpResponseLike;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, {
        method,
        headers: { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new EngineError(0, `engine unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      let message = `HTTP ${response.status}`;
      let path_: string | undefined;
      try {
        const payload = (await response.json()) as { error?: string; path?: string };
        if (payload.error) message = payload.error;
        path_ = payload.path;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new EngineError(response.status, message, path_);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  vocab(): Promise<VocabResponse> {
    return this.request("GET", "/vocab");
  }

  synthesize(graph: GraphDocument, seed?: number): Promise<SceneResponse> {
    return this.request("POST", "/synthesize", { graph, seed });
  }

  solve(graph: GraphDocument, seed?: number, solver?: SolverOverrides): Promise<SceneResponse> {
    return this.request("POST", "/solve", { graph, seed, solver });
  }

  check(graph: GraphDocument, layouts: unknown): Promise<SceneResponse> {
    return this.request("POST", "/check", { graph, layouts });
  }
}

/** Monotone ticket counter: at most one live request per action slot.
 *
 * A response is applied only if its ticket is still the newest for that
 * slot, so a slow older request can never overwrite a newer result.
 */
export class RequestGate {
  private latest = new Map<string, number>();
  private counter = 0;

  begin(slot: string): number {
    const ticket = ++this.counter;
    this.latest.set(slot, ticket);
    return ticket;
  }

  isCurrent(slot: string, ticket: number): boolean {
    return this.latest.get(slot) === ticket;
  }
}
