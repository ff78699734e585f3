"""Forward passes for the graph network: message passing, variational heads,
and the layout/shape decoders.

All math is plain numpy on float64. Weights live in a flat name-to-array
mapping validated against the configured architecture, so a weights file
either matches the model exactly or is rejected with the offending tensor
named.

Message passing follows the triplet scheme: each edge concatenates
[subject row | edge row | object row], applies one ReLU linear map, and
splits the result three ways into a message for the subject, the updated
edge row, and a message for the object. A node's update averages its self
projection with the mean of every message that touches it; nodes without
edges keep the self projection alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import EngineConfig
from .embeddings import FeatureProvenance, GraphFeatureSet
from .errors import InputError
from .graph import SceneGraph, Vocabulary
from .tensorio import read_tensors, write_tensors

_INIT_STD = 0.02


def edge_endpoints(g: SceneGraph) -> np.ndarray:
    """(M, 2) int array of [subject, object] node ids, in edge order."""
    if not g.edges:
        return np.zeros((0, 2), dtype=np.int64)
    return np.array([(e.subject, e.object) for e in g.edges], dtype=np.int64)


def expected_shapes(
    config: EngineConfig, n_objects: int, n_relations: int
) -> dict[str, tuple[int, ...]]:
    """Every tensor the model owns, in deterministic order."""
    q, hidden = config.q, config.hidden_dim
    shapes: dict[str, tuple[int, ...]] = {
        "embed/objects": (n_objects, q),
        "embed/relations": (n_relations, 2 * q),
        "embed/layout_proj": (q, 7),
    }
    for prefix in ("phi", "enc"):
        for i in range(config.gcn_layers):
            d_in = config.node_dim if i == 0 else hidden
            shapes[f"{prefix}/gcn{i}/triplet_w"] = (3 * d_in, 3 * hidden)
            shapes[f"{prefix}/gcn{i}/triplet_b"] = (3 * hidden,)
            shapes[f"{prefix}/gcn{i}/self_w"] = (d_in, hidden)
            shapes[f"{prefix}/gcn{i}/self_b"] = (hidden,)
    for head, width in (("box", config.box_latent_dim), ("rot", config.rotation_latent_dim)):
        shapes[f"phi/{head}/trunk_w"] = (hidden, hidden)
        shapes[f"phi/{head}/trunk_b"] = (hidden,)
        for out in ("mu", "logvar"):
            shapes[f"phi/{head}/{out}_w"] = (hidden, width)
            shapes[f"phi/{head}/{out}_b"] = (width,)
    for head, width in (
        ("layout/box", 6),
        ("layout/rot", config.rotation_bins),
        ("shape", config.shape_code_dim),
    ):
        shapes[f"{head}/l0_w"] = (hidden, hidden)
        shapes[f"{head}/l0_b"] = (hidden,)
        shapes[f"{head}/l1_w"] = (hidden, hidden)
        shapes[f"{head}/l1_b"] = (hidden,)
        shapes[f"{head}/l2_w"] = (hidden, width)
        shapes[f"{head}/l2_b"] = (width,)
    return shapes


@dataclass(frozen=True)
class ModelWeights:
    tensors: dict[str, np.ndarray]
    config: EngineConfig
    n_objects: int
    n_relations: int

    def __post_init__(self) -> None:
        wanted = expected_shapes(self.config, self.n_objects, self.n_relations)
        missing = sorted(set(wanted) - set(self.tensors))
        if missing:
            raise InputError(f"weights are missing tensors: {missing[:5]}", path="/weights")
        extra = sorted(set(self.tensors) - set(wanted))
        if extra:
            raise InputError(f"weights hold unknown tensors: {extra[:5]}", path="/weights")
        for name, shape in wanted.items():
            got = self.tensors[name].shape
            if got != shape:
                raise InputError(
                    f"tensor {name!r} has shape {got}, expected {shape}",
                    path=f"/weights/{name}",
                )
            if not np.all(np.isfinite(self.tensors[name])):
                raise InputError(f"tensor {name!r} holds non-finite values", path=f"/weights/{name}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def save(self, path: str) -> None:
        write_tensors(path, self.tensors)


def seeded_weights(
    config: EngineConfig, n_objects: int, n_relations: int, seed: int = 0
) -> ModelWeights:
    """Deterministic random init: biases zero, matrices small normal draws.

    Category tables use std 1/sqrt(q) and the layout projection 1/sqrt(7) so
    embedded rows land at unit-ish scale.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    tensors: dict[str, np.ndarray] = {}
    for name, shape in expected_shapes(config, n_objects, n_relations).items():
        if name.endswith("_b"):
            tensors[name] = np.zeros(shape)
        elif name in ("embed/objects", "embed/relations"):
            tensors[name] = rng.normal(0.0, 1.0 / np.sqrt(config.q), size=shape)
        elif name == "embed/layout_proj":
            tensors[name] = rng.normal(0.0, 1.0 / np.sqrt(7.0), size=shape)
        else:
            tensors[name] = rng.normal(0.0, _INIT_STD, size=shape)
    return ModelWeights(tensors, config, n_objects, n_relations)


def zero_weights(config: EngineConfig, n_objects: int, n_relations: int) -> ModelWeights:
    tensors = {
        name: np.zeros(shape)
        for name, shape in expected_shapes(config, n_objects, n_relations).items()
    }
    return ModelWeights(tensors, config, n_objects, n_relations)


def load_model_weights(path: str, config: EngineConfig, vocab: Vocabulary) -> ModelWeights:
    tensors = read_tensors(path)
    return ModelWeights(tensors, config, len(vocab.objects), len(vocab.relations))


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def gcn_layer_forward(
    nodes: np.ndarray,
    edges: np.ndarray,
    edge_index: np.ndarray,
    triplet_w: np.ndarray,
    triplet_b: np.ndarray,
    self_w: np.ndarray,
    self_b: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """One round of triplet message passing. Returns (nodes', edges')."""
    n = nodes.shape[0]
    hidden = self_w.shape[1]
    self_map = _relu(nodes @ self_w + self_b)
    if edge_index.shape[0] == 0:
        return self_map, np.zeros((0, hidden))
    src = edge_index[:, 0]
    dst = edge_index[:, 1]
    cat = np.concatenate([nodes[src], edges, nodes[dst]], axis=1)
    fused = _relu(cat @ triplet_w + triplet_b)
    msg_subject = fused[:, :hidden]
    new_edges = fused[:, hidden : 2 * hidden]
    msg_object = fused[:, 2 * hidden :]
    sums = np.zeros((n, hidden))
    counts = np.zeros(n)
    np.add.at(sums, src, msg_subject)
    np.add.at(sums, dst, msg_object)
    np.add.at(counts, src, 1.0)
    np.add.at(counts, dst, 1.0)
    touched = counts > 0
    out = self_map.copy()
    out[touched] = (self_map[touched] + sums[touched] / counts[touched, None]) / 2.0
    return out, new_edges


def gcn_stack_forward(
    weights: ModelWeights,
    prefix: str,
    nodes: np.ndarray,
    edges: np.ndarray,
    edge_index: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    for i in range(weights.config.gcn_layers):
        nodes, edges = gcn_layer_forward(
            nodes,
            edges,
            edge_index,
            weights[f"{prefix}/gcn{i}/triplet_w"],
            weights[f"{prefix}/gcn{i}/triplet_b"],
            weights[f"{prefix}/gcn{i}/self_w"],
            weights[f"{prefix}/gcn{i}/self_b"],
        )
    return nodes, edges


@dataclass(frozen=True)
class LatentDistribution:
    """Diagonal Gaussian over per-node latents."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        if self.mu.shape != self.sigma.shape or self.mu.ndim != 2:
            raise InputError("mu and sigma must be matching 2-D arrays")
        if not np.all(self.sigma > 0.0):
            raise InputError("sigma must be strictly positive")


def _vae_head(weights: ModelWeights, head: str, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    trunk = _relu(h @ weights[f"phi/{head}/trunk_w"] + weights[f"phi/{head}/trunk_b"])
    mu = trunk @ weights[f"phi/{head}/mu_w"] + weights[f"phi/{head}/mu_b"]
    logvar = trunk @ weights[f"phi/{head}/logvar_w"] + weights[f"phi/{head}/logvar_b"]
    logvar = np.clip(logvar, -10.0, 10.0)  # keeps sigma finite and positive
    return mu, np.exp(0.5 * logvar)


def distribution_forward(
    weights: ModelWeights, features: GraphFeatureSet, edge_index: np.ndarray
) -> LatentDistribution:
    """Posterior over latents from ground-truth-conditioned features."""
    if features.provenance is not FeatureProvenance.TRAINING:
        raise InputError(
            "posterior head needs features carrying projected ground-truth layouts"
        )
    nodes, _ = gcn_stack_forward(
        weights, "phi", features.node_features, features.edge_features, edge_index
    )
    mu_box, sigma_box = _vae_head(weights, "box", nodes)
    mu_rot, sigma_rot = _vae_head(weights, "rot", nodes)
    return LatentDistribution(
        np.concatenate([mu_box, mu_rot], axis=1),
        np.concatenate([sigma_box, sigma_rot], axis=1),
    )


def reparameterize(dist: LatentDistribution, seed: int = 0) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return dist.mu + dist.sigma * rng.standard_normal(dist.mu.shape)


def sample_prior_latents(n: int, dim: int, seed: int = 0) -> np.ndarray:
    """Standard normal latents, the inference-time stand-in for the posterior."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return rng.standard_normal((n, dim))


def encode_graph(
    weights: ModelWeights, features: GraphFeatureSet, edge_index: np.ndarray
) -> np.ndarray:
    """Encoder stack over latent-conditioned features; returns node states."""
    if features.provenance is not FeatureProvenance.INFERENCE:
        raise InputError("encoder needs features carrying sampled latents")
    nodes, _ = gcn_stack_forward(
        weights, "enc", features.node_features, features.edge_features, edge_index
    )
    return nodes


def _mlp3(weights: ModelWeights, head: str, h: np.ndarray) -> np.ndarray:
    a = _relu(h @ weights[f"{head}/l0_w"] + weights[f"{head}/l0_b"])
    a = _relu(a @ weights[f"{head}/l1_w"] + weights[f"{head}/l1_b"])
    return a @ weights[f"{head}/l2_w"] + weights[f"{head}/l2_b"]


def decode_layouts(weights: ModelWeights, node_states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Node states to (N, 6) box parameters and (N, bins) rotation logits.

    Sizes pass through softplus so they stay positive; with all-zero weights
    every box comes out ln(2) on a side at the origin with uniform logits.
    """
    raw = _mlp3(weights, "layout/box", node_states)
    params = np.concatenate([_softplus(raw[:, :3]), raw[:, 3:]], axis=1)
    logits = _mlp3(weights, "layout/rot", node_states)
    return params, logits


def shape_codes(weights: ModelWeights, node_states: np.ndarray) -> np.ndarray:
    return _mlp3(weights, "shape", node_states)


def predicted_bins(logits: np.ndarray) -> np.ndarray:
    """Argmax over rotation logits; ties resolve to the lowest bin."""
    return np.argmax(logits, axis=1)
