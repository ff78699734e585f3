"""HTTP facade over the engine.

Validation is done by hand rather than through response models: malformed
request shapes come back as 400 with a JSON-pointer-style path to the bad
field, structurally valid but semantically impossible content as 422, and
anything unexpected as a sanitized 500. Handlers are stateless; the engine
and its weights are shared read-only, and every sampling verb takes its seed
from the request, so concurrent identical requests return identical bodies.
"""

from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from . import boxes
from .config import EngineConfig, _solver_from_dict
from .consistency import edge_verdicts
from .engine import Engine
from .errors import DomainError, InputError, SchemaError
from .graph import SceneGraph, parse_scene_graph
from .payloads import ordered_layouts, parse_layouts_document

logger = logging.getLogger(__name__)


async def _body(request: Request) -> dict:
    try:
        payload = await request.json()
    except Exception as exc:
        raise SchemaError("request body is not valid JSON", path="/") from exc
    if not isinstance(payload, dict):
        raise SchemaError("request body must be a JSON object", path="/")
    return payload


def _graph_from(payload: dict) -> SceneGraph:
    if "graph" not in payload:
        raise SchemaError("missing 'graph'", path="/graph")
    try:
        return parse_scene_graph(payload["graph"])
    except InputError as exc:
        raise type(exc)(exc.args[0], path="/graph" + (exc.path or "")) from exc


def _seed_from(payload: dict, default: int) -> int:
    if "seed" not in payload or payload["seed"] is None:
        return default
    seed = payload["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise SchemaError("'seed' must be an integer", path="/seed")
    return seed


def _scene_summary(g: SceneGraph, layouts, report) -> dict:
    flags, volume = boxes.collision_matrix(layouts)
    n = len(layouts)
    pairs = [[i, j] for i in range(n) for j in range(i + 1, n) if flags[i, j]]
    return {
        "layouts": [b.to_json_dict(i) for i, b in enumerate(layouts)],
        "report": report.to_json_dict(),
        "edges": [
            {
                "index": k,
                "subject": e.subject,
                "predicate": e.predicate.name,
                "object": e.object,
                "status": status,
            }
            for k, (e, status) in enumerate(zip(g.edges, edge_verdicts(g, layouts)))
        ],
        "collisions": {"pairs": pairs, "volume": volume},
    }


def create_app(config: EngineConfig | None = None, engine: Engine | None = None) -> FastAPI:
    engine = engine or Engine(config or EngineConfig())
    app = FastAPI(title="p3d", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(SchemaError)
    async def schema_error(_: Request, exc: SchemaError) -> JSONResponse:
        return JSONResponse({"error": exc.args[0], "path": exc.path or "/"}, status_code=400)

    @app.exception_handler(DomainError)
    async def domain_error(_: Request, exc: DomainError) -> JSONResponse:
        return JSONResponse({"error": exc.args[0], "path": exc.path or "/"}, status_code=422)

    @app.exception_handler(InputError)
    async def input_error(_: Request, exc: InputError) -> JSONResponse:
        return JSONResponse({"error": exc.args[0], "path": exc.path or "/"}, status_code=400)

    @app.exception_handler(Exception)
    async def internal_error(_: Request, exc: Exception) -> JSONResponse:
        logger.exception("unhandled service error", exc_info=exc)
        return JSONResponse({"error": "internal error"}, status_code=500)

    @app.get("/health")
    async def health() -> dict:
        return {"status": "ok"}

    @app.get("/vocab")
    async def vocab() -> dict:
        v = engine.vocab
        return {
            "objects": [c.name for c in v.objects],
            "relations": [{"name": r.name, "tier": r.tier} for r in v.relations],
        }

    @app.post("/synthesize")
    async def synthesize(request: Request) -> dict:
        payload = await _body(request)
        g = _graph_from(payload)
        seed = _seed_from(payload, engine.config.seed)
        result = await run_in_threadpool(engine.synthesize, g, seed)
        out = _scene_summary(g, result.layouts, result.report)
        out["seed"] = result.seed
        out["shape_code_dim"] = int(result.shape_codes.shape[1])
        return out

    @app.post("/solve")
    async def solve(request: Request) -> dict:
        payload = await _body(request)
        g = _graph_from(payload)
        solver = engine.config.solver
        if "solver" in payload and payload["solver"] is not None:
            if not isinstance(payload["solver"], dict):
                raise SchemaError("'solver' must be an object", path="/solver")
            solver = _solver_from_dict(payload["solver"], solver)
        if "seed" in payload:
            from dataclasses import replace

            solver = replace(solver, seed=_seed_from(payload, solver.seed))
        layouts, trace, report = await run_in_threadpool(engine.solve, g, solver)
        out = _scene_summary(g, layouts, report)
        out["feasible"] = trace.feasible
        out["message"] = trace.message
        out["iterations"] = len(trace)
        out["objective"] = trace.objective[-1]
        return out

    @app.post("/refine")
    async def refine(request: Request) -> dict:
        payload = await _body(request)
        g = _graph_from(payload)
        if "layouts" not in payload:
            raise SchemaError("missing 'layouts'", path="/layouts")
        initial = ordered_layouts(g, parse_layouts_document(payload["layouts"], "/layouts"))
        if "targets" in payload and payload["targets"] is not None:
            targets = ordered_layouts(
                g, parse_layouts_document(payload["targets"], "/targets")
            )
        else:
            targets = engine.refine_targets(g)
        refined, trace = await run_in_threadpool(engine.refine, initial, targets)
        report = engine.check(g, refined)
        out = _scene_summary(g, refined, report)
        out["objective"] = trace.objective[-1]
        out["iterations"] = len(trace)
        return out

    @app.post("/check")
    async def check(request: Request) -> dict:
        payload = await _body(request)
        g = _graph_from(payload)
        if "layouts" not in payload:
            raise SchemaError("missing 'layouts'", path="/layouts")
        layouts = ordered_layouts(g, parse_layouts_document(payload["layouts"], "/layouts"))
        report = await run_in_threadpool(engine.check, g, layouts)
        return _scene_summary(g, layouts, report)

    return app
