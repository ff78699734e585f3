"""Command-line entry points.

Subcommands: synth, solve, refine, check, metrics, serve. Every command
reads configuration in precedence order (flags, then P3D_* environment
variables, then --config JSON, then defaults), validates inputs up front,
and writes byte-stable outputs so reruns with identical inputs produce
identical files.

Exit codes: 0 success, 2 invalid input, 3 runtime failure.
"""

from __future__ import annotations

import functools
import os
import sys

import click
import numpy as np

from .config import EngineConfig, load_config
from .engine import Engine
from .errors import InputError
from .graph import SceneGraph, parse_scene_graph
from .optimizer import SolverConfig
from .payloads import dump_json, layouts_to_document, load_layouts_file, ordered_layouts
from .tensorio import read_tensors, write_tensors


def _guarded(fn):
    """Map error classes to the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InputError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except click.ClickException:
            raise
        except Exception as exc:  # noqa: BLE001 - boundary of the process
            click.echo(f"failure: {type(exc).__name__}: {exc}", err=True)
            sys.exit(3)

    return wrapper


def _load_graph(path: str) -> SceneGraph:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read graph file: {exc}", path="/graph") from exc
    return parse_scene_graph(text)


def _engine(config_path: str | None, **overrides) -> Engine:
    cfg = load_config(config_path, overrides=overrides)
    return Engine(cfg)


def _write_text(path: str, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


@click.group()
def main() -> None:
    """Scene graph to 3-D layout engine."""


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None, help="Sampling seed for prior latents.")
@click.option("--weights", "weights_path", type=click.Path(dir_okay=False), default=None)
@click.option("--embeddings", "embeddings_path", type=click.Path(dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@_guarded
def synth(graph_path, out_dir, seed, weights_path, embeddings_path, config_path) -> None:
    """Sample a layout and shape codes for a scene graph."""
    engine = _engine(
        config_path, seed=seed, weights_path=weights_path, embeddings_path=embeddings_path
    )
    g = _load_graph(graph_path)
    result = engine.synthesize(g)
    os.makedirs(out_dir, exist_ok=True)
    doc = layouts_to_document(result.layouts)
    doc["seed"] = result.seed
    _write_text(os.path.join(out_dir, "layouts.json"), dump_json(doc))
    write_tensors(
        os.path.join(out_dir, "shape_codes.p3dw"), {"shape_codes": result.shape_codes}
    )
    _write_text(os.path.join(out_dir, "report.json"), dump_json(result.report.to_json_dict()))
    click.echo(f"wrote layouts for {len(result.layouts)} node(s) to {out_dir}")


def _solver_overrides(max_iters, overlap_weight, step_size, seed) -> dict:
    solver = {}
    if max_iters is not None:
        solver["max_iters"] = max_iters
    if overlap_weight is not None:
        solver["overlap_weight"] = overlap_weight
    if step_size is not None:
        solver["step_size"] = step_size
    if seed is not None:
        solver["seed"] = seed
    return {"solver": solver} if solver else {}


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None, help="Seed for initial placements.")
@click.option("--max-iters", type=int, default=None)
@click.option("--overlap-weight", type=float, default=None)
@click.option("--step-size", type=float, default=None)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@_guarded
def solve(graph_path, out_dir, seed, max_iters, overlap_weight, step_size, config_path) -> None:
    """Solve layouts from graph constraints alone."""
    overrides = _solver_overrides(max_iters, overlap_weight, step_size, seed)
    engine = _engine(config_path, **overrides)
    g = _load_graph(graph_path)
    layouts, trace, report = engine.solve(g)
    os.makedirs(out_dir, exist_ok=True)
    doc = layouts_to_document(layouts)
    doc["feasible"] = trace.feasible
    if trace.message:
        doc["message"] = trace.message
    _write_text(os.path.join(out_dir, "layouts.json"), dump_json(doc))
    trace.write_csv(os.path.join(out_dir, "trace.csv"))
    _write_text(os.path.join(out_dir, "report.json"), dump_json(report.to_json_dict()))
    status = "feasible" if trace.feasible else "best effort"
    click.echo(f"solved {len(layouts)} node(s) in {len(trace)} evaluations ({status})")
    if trace.message:
        click.echo(trace.message, err=True)


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(dir_okay=False))
@click.option("--layouts", "layouts_path", required=True, type=click.Path(dir_okay=False))
@click.option("--targets", "targets_path", type=click.Path(dir_okay=False), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--max-iters", type=int, default=None)
@click.option("--step-size", type=float, default=None)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@_guarded
def refine(graph_path, layouts_path, targets_path, out_dir, max_iters, step_size, config_path) -> None:
    """Pull layouts toward target boxes (explicit file or the graph's own)."""
    overrides = _solver_overrides(max_iters, None, step_size, None)
    engine = _engine(config_path, **overrides)
    g = _load_graph(graph_path)
    initial = ordered_layouts(g, load_layouts_file(layouts_path))
    if targets_path is not None:
        targets = ordered_layouts(g, load_layouts_file(targets_path))
    else:
        targets = engine.refine_targets(g)
    refined, trace = engine.refine(initial, targets)
    os.makedirs(out_dir, exist_ok=True)
    _write_text(os.path.join(out_dir, "layouts.json"), dump_json(layouts_to_document(refined)))
    trace.write_csv(os.path.join(out_dir, "trace.csv"))
    click.echo(
        f"refined {len(refined)} node(s); objective {trace.objective[-1]:.6g} "
        f"after {len(trace)} evaluations"
    )


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(dir_okay=False))
@click.option("--layouts", "layouts_path", required=True, type=click.Path(dir_okay=False))
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@_guarded
def check(graph_path, layouts_path, report_path) -> None:
    """Score layouts against the graph's geometric rules."""
    engine = Engine(EngineConfig())
    g = _load_graph(graph_path)
    layouts = ordered_layouts(g, load_layouts_file(layouts_path))
    report = engine.check(g, layouts)
    click.echo(report.format_table())
    if report_path is not None:
        _write_text(report_path, dump_json(report.to_json_dict()))


def _load_cloud_set(path: str) -> list[np.ndarray]:
    tensors = read_tensors(path)
    clouds = []
    for name in sorted(tensors):
        arr = tensors[name]
        if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] < 1:
            raise InputError(
                f"tensor {name!r} is not a point cloud (need (K, 3))", path=f"/{name}"
            )
        clouds.append(arr)
    if not clouds:
        raise InputError("cloud container holds no tensors", path="/")
    return clouds


@main.command()
@click.option("--reference", "reference_path", required=True, type=click.Path(dir_okay=False))
@click.option("--generated", "generated_path", required=True, type=click.Path(dir_okay=False))
@_guarded
def metrics(reference_path, generated_path) -> None:
    """Distribution metrics between two point-cloud collections."""
    from . import metrics as m

    reference = _load_cloud_set(reference_path)
    generated = _load_cloud_set(generated_path)
    out = {
        "mmd": m.mmd(reference, generated),
        "cov": m.cov(reference, generated),
        "one_nna": m.one_nna(reference, generated),
        "reference_clouds": len(reference),
        "generated_clouds": len(generated),
    }
    click.echo(dump_json(out), nl=False)


@main.command()
@click.option("--port", type=int, default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--weights", "weights_path", type=click.Path(dir_okay=False), default=None)
@click.option("--embeddings", "embeddings_path", type=click.Path(dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@_guarded
def serve(port, host, weights_path, embeddings_path, config_path) -> None:
    """Run the HTTP service."""
    cfg = load_config(
        config_path,
        overrides={"port": port, "weights_path": weights_path, "embeddings_path": embeddings_path},
    )
    import uvicorn

    from .service import create_app

    app = create_app(cfg)
    uvicorn.run(app, host=host, port=cfg.port, log_level="warning")


if __name__ == "__main__":
    main()
