/** Test-side plumbing: a node:http transport matching FetchLike, a free-port
 * picker, and a spawned engine service with health polling. */

import { spawn, type ChildProcess } from "node:child_process";
import * as http from "node:http";
import * as net from "node:net";
import * as path from "node:path";

import type { FetchLike, HttpResponseLike } from "../src/api";
import type { GraphDocument } from "../src/types";

export const nodeFetch: FetchLike = (url, init) =>
  new Promise<HttpResponseLike>((resolve, reject) => {
    const req = http.request(
      url,
      { method: init?.method ?? "GET", headers: init?.headers },
      (res) => {
        const chunks: Buffer[] = [];
        res.on("data", (chunk: Buffer) => chunks.push(chunk));
        res.on("end", () => {
          const code = res.statusCode ?? 0;
          const text = Buffer.concat(chunks).toString("utf8");
          resolve({
            ok: code >= 200 && code < 300,
            status: code,
            json: () => Promise.resolve(JSON.parse(text) as unknown),
          });
        });
      },
    );
    req.on("error", reject);
    if (init?.body !== undefined) req.write(init.body);
    req.end();
  });

export function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = net.createServer();
    srv.once("error", reject);
    srv.listen(0, "127.0.0.1", () => {
      const addr = srv.address();
      if (addr === null || typeof addr === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      srv.close(() => resolve(addr.port));
    });
  });
}

export interface RunningEngine {
  baseUrl: string;
  stop(): Promise<void>;
}

// the test runner's working directory is frontend/, one level below the repo
const REPO_ROOT = path.resolve(process.cwd(), "..");

/** Spawn `python -m p3d.cli serve` on a free port and wait until /health
 * answers. Rejects with the child's output if it never comes up. */
export async function startEngine(timeoutMs = 30_000): Promise<RunningEngine> {
  const port = await freePort();
  const child: ChildProcess = spawn("python3", ["-m", "p3d.cli", "serve", "--port", String(port)], {
    cwd: REPO_ROOT,
    stdio: ["ignore", "pipe", "pipe"],
  });
  let output = "";
  child.stdout?.on("data", (chunk: Buffer) => {
    output += chunk.toString("utf8");
  });
  child.stderr?.on("data", (chunk: Buffer) => {
    output += chunk.toString("utf8");
  });

  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    if (child.exitCode !== null) {
      throw new Error(`engine exited with ${child.exitCode}:\n${output}`);
    }
    try {
      const res = await nodeFetch(`${baseUrl}/health`);
      if (res.ok) break;
    } catch {
      // not listening yet
    }
    if (Date.now() > deadline) {
      child.kill("SIGKILL");
      throw new Error(`engine never became healthy:\n${output}`);
    }
    await new Promise((r) => setTimeout(r, 250));
  }

  return {
    baseUrl,
    stop: () =>
      new Promise<void>((resolve) => {
        if (child.exitCode !== null) {
          resolve();
          return;
        }
        child.once("exit", () => resolve());
        child.kill("SIGTERM");
        setTimeout(() => child.kill("SIGKILL"), 3000).unref();
      }),
  };
}

/** Three furniture pieces with satisfiable placement rules. */
export function loopFixture(): GraphDocument {
  return {
    id: "studio-loop",
    nodes: [
      { id: 0, category: "bed" },
      { id: 1, category: "nightstand" },
      { id: 2, category: "wardrobe" },
    ],
    edges: [
      { subject: 1, predicate: "left of", object: 0 },
      { subject: 2, predicate: "right of", object: 0 },
      { subject: 0, predicate: "bigger than", object: 1 },
    ],
  };
}
