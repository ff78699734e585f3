"""Engine configuration with layered sources.

Precedence, highest first: explicit CLI flags, ``P3D_``-prefixed environment
variables, a JSON config file, built-in defaults. ``from_sources`` applies
the layers in that order and validates the merged result once.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping

from .embeddings import CONTEXT_DIM, DEFAULT_Q, GLOBAL_DIM
from .errors import InputError
from .losses import LossWeights
from .optimizer import SolverConfig

ENV_PREFIX = "P3D_"

# Keys settable from the environment or a config file, with coercion type.
_SCALAR_FIELDS: dict[str, type] = {
    "q": int,
    "context_dim": int,
    "global_dim": int,
    "rotation_bins": int,
    "box_latent_dim": int,
    "rotation_latent_dim": int,
    "gcn_layers": int,
    "hidden_dim": int,
    "shape_code_dim": int,
    "diffusion_steps": int,
    "beta_start": float,
    "beta_end": float,
    "latent_resolution": int,
    "sdf_resolution": int,
    "seed": int,
    "port": int,
    "weights_path": str,
    "embeddings_path": str,
}


@dataclass(frozen=True)
class EngineConfig:
    q: int = DEFAULT_Q
    context_dim: int = CONTEXT_DIM
    global_dim: int = GLOBAL_DIM
    rotation_bins: int = 24
    box_latent_dim: int = 48
    rotation_latent_dim: int = 16
    gcn_layers: int = 5
    hidden_dim: int = 512
    shape_code_dim: int = 1280
    diffusion_steps: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    latent_resolution: int = 16
    sdf_resolution: int = 64
    seed: int = 0
    port: int = 8000
    weights_path: str | None = None
    embeddings_path: str | None = None
    loss_weights: LossWeights = field(default_factory=LossWeights)
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        positive = (
            "q", "context_dim", "global_dim", "rotation_bins", "gcn_layers",
            "hidden_dim", "shape_code_dim", "diffusion_steps",
            "latent_resolution", "sdf_resolution",
        )
        for name in positive:
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be a positive integer", path=f"/{name}")
        for name in ("box_latent_dim", "rotation_latent_dim"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be a positive integer", path=f"/{name}")
        if self.box_latent_dim + self.rotation_latent_dim != self.q:
            raise InputError(
                "box and rotation latent dims must sum to the layout width "
                f"({self.box_latent_dim} + {self.rotation_latent_dim} != {self.q})",
                path="/q",
            )
        if not (0.0 < self.beta_start <= self.beta_end < 1.0):
            raise InputError(
                "noise schedule needs 0 < beta_start <= beta_end < 1",
                path="/beta_start",
            )
        if not (1 <= self.port <= 65535):
            raise InputError("port must lie in [1, 65535]", path="/port")

    @property
    def node_dim(self) -> int:
        return 2 * self.q + self.context_dim + self.global_dim

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "loss_weights":
                out[f.name] = {
                    "lambda_kl": value.lambda_kl,
                    "lambda_layout": value.lambda_layout,
                    "lambda_shape": value.lambda_shape,
                    "eta": value.eta,
                }
            elif f.name == "solver":
                out[f.name] = {
                    "max_iters": value.max_iters,
                    "step_size": value.step_size,
                    "momentum": value.momentum,
                    "eta": value.eta,
                    "overlap_weight": value.overlap_weight,
                    "rule_weight": value.rule_weight,
                    "bounds": list(value.bounds),
                    "seed": value.seed,
                    "tolerance": value.tolerance,
                }
            else:
                out[f.name] = value
        return out


def _coerce(name: str, raw: Any, kind: type, source: str) -> Any:
    if kind is str:
        if not isinstance(raw, str):
            raise InputError(f"{name} must be a string ({source})", path=f"/{name}")
        return raw
    if isinstance(raw, bool):
        raise InputError(f"{name} must be a number, not a boolean ({source})", path=f"/{name}")
    try:
        return kind(raw)
    except (TypeError, ValueError) as exc:
        raise InputError(
            f"{name} must be {kind.__name__}-valued, got {raw!r} ({source})",
            path=f"/{name}",
        ) from exc


def _solver_from_dict(doc: Mapping[str, Any], base: SolverConfig) -> SolverConfig:
    known = {
        "max_iters": int, "step_size": float, "momentum": float, "eta": float,
        "overlap_weight": float, "rule_weight": float, "seed": int,
        "tolerance": float,
    }
    updates: dict[str, Any] = {}
    for key, raw in doc.items():
        if key == "bounds":
            if (
                not isinstance(raw, (list, tuple))
                or len(raw) != 3
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw)
            ):
                raise InputError(
                    "solver bounds must be three numbers", path="/solver/bounds"
                )
            updates["bounds"] = (float(raw[0]), float(raw[1]), float(raw[2]))
        elif key in known:
            updates[key] = _coerce(key, raw, known[key], "solver config")
        else:
            raise InputError(f"unknown solver option {key!r}", path=f"/solver/{key}")
    try:
        return replace(base, **updates)
    except ValueError as exc:
        raise InputError(str(exc), path="/solver") from exc


def _weights_from_dict(doc: Mapping[str, Any], base: LossWeights) -> LossWeights:
    known = {"lambda_kl": float, "lambda_layout": float, "lambda_shape": float, "eta": float}
    updates: dict[str, Any] = {}
    for key, raw in doc.items():
        if key not in known:
            raise InputError(f"unknown loss weight {key!r}", path=f"/loss_weights/{key}")
        updates[key] = _coerce(key, raw, known[key], "loss weights")
    try:
        return replace(base, **updates)
    except ValueError as exc:
        raise InputError(str(exc), path="/loss_weights") from exc


def _apply_layer(cfg_kwargs: dict[str, Any], layer: Mapping[str, Any], source: str) -> None:
    for key, raw in layer.items():
        if key in _SCALAR_FIELDS:
            cfg_kwargs[key] = _coerce(key, raw, _SCALAR_FIELDS[key], source)
        elif key == "solver":
            if not isinstance(raw, Mapping):
                raise InputError("solver section must be an object", path="/solver")
            cfg_kwargs["solver"] = _solver_from_dict(raw, cfg_kwargs.get("solver", SolverConfig()))
        elif key == "loss_weights":
            if not isinstance(raw, Mapping):
                raise InputError("loss_weights section must be an object", path="/loss_weights")
            cfg_kwargs["loss_weights"] = _weights_from_dict(
                raw, cfg_kwargs.get("loss_weights", LossWeights())
            )
        else:
            raise InputError(f"unknown config key {key!r} ({source})", path=f"/{key}")


def _env_layer(env: Mapping[str, str]) -> dict[str, Any]:
    layer: dict[str, Any] = {}
    for name in _SCALAR_FIELDS:
        env_name = ENV_PREFIX + name.upper()
        if env_name in env:
            layer[name] = env[env_name]
    return layer


def load_config(
    config_path: str | None = None,
    overrides: Mapping[str, Any] | None = None,
    env: Mapping[str, str] | None = None,
) -> EngineConfig:
    """Merge defaults, config file, environment, and explicit overrides."""
    env = os.environ if env is None else env
    kwargs: dict[str, Any] = {}
    if config_path is not None:
        try:
            with open(config_path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read config file: {exc}", path="/config") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"config file is not valid JSON: {exc}", path="/config") from exc
        if not isinstance(doc, dict):
            raise InputError("config file must hold a JSON object", path="/config")
        _apply_layer(kwargs, doc, "config file")
    _apply_layer(kwargs, _env_layer(env), "environment")
    if overrides:
        _apply_layer(kwargs, {k: v for k, v in overrides.items() if v is not None}, "flags")
    try:
        return EngineConfig(**kwargs)
    except TypeError as exc:
        raise InputError(f"invalid configuration: {exc}", path="/") from exc
