"""Scene-graph-driven 3-D indoor layout engine.

Turns labeled scene graphs (objects plus pairwise spatial relations) into
7-DoF box layouts and shape codes, scores them against geometric rules, and
measures generated shape sets against references. Ships with a CLI and an
HTTP service.
"""

from .boxes import BoxLayout, bin_angle, unbin_angle
from .config import EngineConfig, load_config
from .consistency import (
    ConsistencyReport,
    RuleThresholds,
    check_edge,
    consistency_report,
    edge_verdicts,
    violation_count,
)
from .diffusion import NoiseSchedule, ancestral_sample, build_schedule
from .embeddings import (
    FeatureProvenance,
    GraphFeatureSet,
    assemble_inference_features,
    assemble_training_features,
)
from .engine import Engine, SynthesisResult
from .errors import DomainError, InputError, SchemaError
from .graph import SceneGraph, Vocabulary, parse_scene_graph, serialize_scene_graph
from .losses import LossWeights, kl_loss, layout_loss, layout_rec_loss, total_loss
from .metrics import chamfer, cov, mmd, one_nna
from .network import ModelWeights, seeded_weights
from .optimizer import SolveTrace, SolverConfig, refine_layouts, solve_from_graph
from .sdf import TSDFGrid, box_sdf, grid_from_sdf, surface_points

__version__ = "0.1.0"

__all__ = [
    "BoxLayout",
    "ConsistencyReport",
    "DomainError",
    "Engine",
    "EngineConfig",
    "FeatureProvenance",
    "GraphFeatureSet",
    "InputError",
    "LossWeights",
    "ModelWeights",
    "NoiseSchedule",
    "RuleThresholds",
    "SceneGraph",
    "SchemaError",
    "SolveTrace",
    "SolverConfig",
    "SynthesisResult",
    "TSDFGrid",
    "Vocabulary",
    "ancestral_sample",
    "assemble_inference_features",
    "assemble_training_features",
    "bin_angle",
    "box_sdf",
    "build_schedule",
    "chamfer",
    "check_edge",
    "consistency_report",
    "cov",
    "edge_verdicts",
    "grid_from_sdf",
    "kl_loss",
    "layout_loss",
    "layout_rec_loss",
    "load_config",
    "mmd",
    "one_nna",
    "parse_scene_graph",
    "refine_layouts",
    "seeded_weights",
    "serialize_scene_graph",
    "solve_from_graph",
    "surface_points",
    "total_loss",
    "unbin_angle",
    "violation_count",
    "__version__",
]
