"""Text-embedding providers, category/layout tables, and feature assembly.

Node and edge feature rows are concatenations of fixed-width blocks:

    node row: [category Q | layout-or-latent Q | context CONTEXT_DIM | global GLOBAL_DIM]
    edge row: [category 2Q | context CONTEXT_DIM | global GLOBAL_DIM]

With the default Q = 64 both rows are 1408 wide. Training-time assembly puts
a projected ground-truth layout in the second node block; inference-time
assembly puts a sampled latent vector there instead, leaving every other
column untouched.

Pseudo text embeddings hash the prompt into a counter-based generator and
L2-normalize a standard-normal draw, so any prompt maps to a deterministic
unit vector on every platform without model downloads. Real embeddings can
be supplied through a table file keyed by the exact prompt string.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Protocol, Sequence

import numpy as np

from .boxes import BoxLayout
from .graph import SceneGraph
from . import tensorio

logger = logging.getLogger(__name__)

# Widths of the two prompt-derived blocks: per-node/per-edge context vectors
# and the graph-level instruction-conditioned vector.
CONTEXT_DIM = 512
GLOBAL_DIM = 768

DEFAULT_Q = 64


class EmbeddingProvider(Protocol):
    def embed_text(self, prompt: str, dim: int) -> np.ndarray:
        """Deterministic unit-norm vector of the requested width."""
        ...


class HashEmbedder:
    """Prompt-hash seeded pseudo embeddings; unit norm, fully deterministic."""

    def embed_text(self, prompt: str, dim: int) -> np.ndarray:
        if dim <= 0:
            raise ValueError(f"embedding dim must be positive, got {dim}")
        digest = hashlib.sha256(
            dim.to_bytes(8, "little") + prompt.encode("utf-8")
        ).digest()
        key = int.from_bytes(digest[:16], "little")
        rng = np.random.Generator(np.random.Philox(key=key))
        vec = rng.standard_normal(dim)
        norm = float(np.linalg.norm(vec))
        while norm < 1e-12:  # pragma: no cover - astronomically unlikely
            vec = rng.standard_normal(dim)
            norm = float(np.linalg.norm(vec))
        return vec / norm


class FileEmbedder:
    """Embedding table keyed by exact prompt, with hashed fallback.

    Prompts missing from the table fall back to the pseudo provider and log
    a warning, so partially populated tables degrade loudly but gracefully.
    """

    def __init__(self, table: Mapping[str, np.ndarray], fallback: EmbeddingProvider | None = None):
        self._table = {k: np.asarray(v, dtype=np.float64) for k, v in table.items()}
        self._fallback = fallback or HashEmbedder()

    @classmethod
    def from_file(cls, path: str, fallback: EmbeddingProvider | None = None) -> "FileEmbedder":
        return cls(tensorio.read_embeddings(path), fallback)

    def embed_text(self, prompt: str, dim: int) -> np.ndarray:
        vec = self._table.get(prompt)
        if vec is None:
            logger.warning(
                "prompt %r not in embedding table; using pseudo embedding", prompt
            )
            return self._fallback.embed_text(prompt, dim)
        if vec.shape != (dim,):
            raise ValueError(
                f"embedding for prompt {prompt!r} has width {vec.shape}, expected ({dim},)"
            )
        return vec


def pseudo_context_embedding(prompt: str, dim: int = CONTEXT_DIM) -> np.ndarray:
    """Pseudo stand-in for a vision-language text encoder (512 wide)."""
    return HashEmbedder().embed_text(prompt, dim)


def pseudo_instruction_embedding(prompt: str, dim: int = GLOBAL_DIM) -> np.ndarray:
    """Pseudo stand-in for an instruction-tuned text encoder (768 wide)."""
    return HashEmbedder().embed_text(prompt, dim)


def build_category_tables(
    n_objects: int, n_relations: int, q: int = DEFAULT_Q, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded category lookup tables: objects (n, Q), relations (n, 2Q).

    Entries are drawn from a normal with standard deviation 1/sqrt(Q).
    """
    if q <= 0:
        raise ValueError("q must be positive")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    std = 1.0 / np.sqrt(q)
    objects = rng.normal(0.0, std, size=(n_objects, q))
    relations = rng.normal(0.0, std, size=(n_relations, 2 * q))
    return objects, relations


def embed_categories(
    g: SceneGraph, object_table: np.ndarray, relation_table: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Look up category vectors: nodes (N, Q), edges (M, 2Q)."""
    object_table = np.asarray(object_table, dtype=np.float64)
    relation_table = np.asarray(relation_table, dtype=np.float64)
    for n in g.nodes:
        if n.category.id >= object_table.shape[0]:
            raise ValueError(
                f"object category id {n.category.id} outside table of "
                f"{object_table.shape[0]} rows"
            )
    for e in g.edges:
        if e.predicate.id >= relation_table.shape[0]:
            raise ValueError(
                f"relation category id {e.predicate.id} outside table of "
                f"{relation_table.shape[0]} rows"
            )
    node_vecs = object_table[[n.category.id for n in g.nodes], :]
    if g.edges:
        edge_vecs = relation_table[[e.predicate.id for e in g.edges], :]
    else:
        edge_vecs = np.zeros((0, relation_table.shape[1]), dtype=np.float64)
    return node_vecs, edge_vecs


def embed_categories_seeded(
    g: SceneGraph, n_objects: int, n_relations: int, q: int = DEFAULT_Q, table_seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Convenience wrapper: build seeded tables, then look categories up."""
    objects, relations = build_category_tables(n_objects, n_relations, q, table_seed)
    return embed_categories(g, objects, relations)


def layout_row(box: BoxLayout) -> np.ndarray:
    """Box parameters plus the bin-center yaw in radians, shape (7,)."""
    return np.array(
        [box.w, box.l, box.h, box.cx, box.cy, box.cz, np.radians(box.angle_deg)],
        dtype=np.float64,
    )


def embed_layouts(layouts: Sequence[BoxLayout], projection: np.ndarray) -> np.ndarray:
    """Project 7-parameter layout rows through a linear map, (N, Q).

    ``projection`` has shape (Q, 7); each output row is ``projection @ row``
    where the row is [w, l, h, cx, cy, cz, yaw_radians] and the yaw is the
    bin-center angle, not the raw class index.
    """
    projection = np.asarray(projection, dtype=np.float64)
    if projection.ndim != 2 or projection.shape[1] != 7:
        raise ValueError(f"layout projection must have shape (Q, 7), got {projection.shape}")
    if not layouts:
        return np.zeros((0, projection.shape[0]), dtype=np.float64)
    rows = np.stack([layout_row(b) for b in layouts])
    return rows @ projection.T


def gt_layout_list(g: SceneGraph) -> list[BoxLayout]:
    """Ground-truth layouts ordered by node id; every node must have one."""
    if g.gt_layouts is None:
        raise ValueError("scene graph carries no ground-truth layouts")
    missing = [n.node_id for n in g.nodes if n.node_id not in g.gt_layouts]
    if missing:
        raise ValueError(f"ground-truth layout missing for nodes {missing}")
    return [g.gt_layouts[n.node_id] for n in g.nodes]


class FeatureProvenance(Enum):
    TRAINING = "training"
    INFERENCE = "inference"


def node_block_slices(
    q: int = DEFAULT_Q, context_dim: int = CONTEXT_DIM, global_dim: int = GLOBAL_DIM
) -> dict[str, slice]:
    """Column ranges of the node-row blocks."""
    return {
        "category": slice(0, q),
        "layout_or_latent": slice(q, 2 * q),
        "context": slice(2 * q, 2 * q + context_dim),
        "global": slice(2 * q + context_dim, 2 * q + context_dim + global_dim),
    }


def edge_block_slices(
    q: int = DEFAULT_Q, context_dim: int = CONTEXT_DIM, global_dim: int = GLOBAL_DIM
) -> dict[str, slice]:
    """Column ranges of the edge-row blocks."""
    return {
        "category": slice(0, 2 * q),
        "context": slice(2 * q, 2 * q + context_dim),
        "global": slice(2 * q + context_dim, 2 * q + context_dim + global_dim),
    }


@dataclass(frozen=True)
class GraphFeatureSet:
    """Assembled per-node and per-edge feature matrices.

    Node and edge rows always share one width (2Q + context + global), which
    is what lets the message-passing layers concatenate them directly.
    """

    node_features: np.ndarray
    edge_features: np.ndarray
    provenance: FeatureProvenance

    def __post_init__(self) -> None:
        nodes = np.asarray(self.node_features, dtype=np.float64)
        edges = np.asarray(self.edge_features, dtype=np.float64)
        if nodes.ndim != 2 or edges.ndim != 2:
            raise ValueError("feature matrices must be 2-D")
        if nodes.shape[0] < 1:
            raise ValueError("a feature set needs at least one node row")
        if nodes.shape[1] != edges.shape[1]:
            raise ValueError(
                f"node width {nodes.shape[1]} != edge width {edges.shape[1]}"
            )
        if not np.all(np.isfinite(nodes)) or (edges.size and not np.all(np.isfinite(edges))):
            raise ValueError("feature matrices must be finite")
        object.__setattr__(self, "node_features", nodes)
        object.__setattr__(self, "edge_features", edges)

    @property
    def n_nodes(self) -> int:
        return self.node_features.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edge_features.shape[0]

    @property
    def width(self) -> int:
        return self.node_features.shape[1]


def _stack_blocks(blocks: Sequence[np.ndarray], rows: int, what: str) -> np.ndarray:
    widths = []
    for b in blocks:
        b = np.asarray(b)
        if b.ndim != 2 or b.shape[0] != rows:
            raise ValueError(f"{what} block with shape {b.shape} does not have {rows} rows")
        widths.append(b.shape[1])
    if rows == 0:
        return np.zeros((0, sum(widths)), dtype=np.float64)
    return np.concatenate([np.asarray(b, dtype=np.float64) for b in blocks], axis=1)


def _assemble(
    category_nodes: np.ndarray,
    second_block: np.ndarray,
    node_context: np.ndarray,
    category_edges: np.ndarray,
    edge_context: np.ndarray,
    global_vec: np.ndarray,
    provenance: FeatureProvenance,
) -> GraphFeatureSet:
    category_nodes = np.asarray(category_nodes, dtype=np.float64)
    second_block = np.asarray(second_block, dtype=np.float64)
    n = category_nodes.shape[0]
    m = np.asarray(category_edges).shape[0]
    q = category_nodes.shape[1]
    if second_block.shape != (n, q):
        raise ValueError(
            f"second node block must match the category block shape ({n}, {q}), "
            f"got {second_block.shape}"
        )
    if np.asarray(category_edges).shape[1:] != (2 * q,):
        raise ValueError(
            f"edge category block must be (M, {2 * q}), got {np.asarray(category_edges).shape}"
        )
    global_vec = np.asarray(global_vec, dtype=np.float64).reshape(-1)
    node_global = np.tile(global_vec, (n, 1))
    edge_global = np.tile(global_vec, (m, 1)) if m else np.zeros((0, global_vec.shape[0]))
    nodes = _stack_blocks([category_nodes, second_block, node_context, node_global], n, "node")
    edges = _stack_blocks([category_edges, edge_context, edge_global], m, "edge")
    return GraphFeatureSet(nodes, edges, provenance)


def assemble_training_features(
    category_nodes: np.ndarray,
    layout_vecs: np.ndarray,
    node_context: np.ndarray,
    category_edges: np.ndarray,
    edge_context: np.ndarray,
    global_vec: np.ndarray,
) -> GraphFeatureSet:
    """Training-time features: ground-truth layout projections in block two."""
    return _assemble(
        category_nodes, layout_vecs, node_context,
        category_edges, edge_context, global_vec,
        FeatureProvenance.TRAINING,
    )


def assemble_inference_features(
    category_nodes: np.ndarray,
    latent_vecs: np.ndarray,
    node_context: np.ndarray,
    category_edges: np.ndarray,
    edge_context: np.ndarray,
    global_vec: np.ndarray,
) -> GraphFeatureSet:
    """Inference-time features: sampled latent vectors in block two."""
    return _assemble(
        category_nodes, latent_vecs, node_context,
        category_edges, edge_context, global_vec,
        FeatureProvenance.INFERENCE,
    )
