"""High-level facade: text and category conditioning in, layouts out.

The engine owns the weights, the embedding provider, and the vocabulary, and
exposes the four verbs the CLI and service need: synthesize, solve, refine,
check. Every verb is a deterministic function of (inputs, seed, weights), so
repeated calls with the same arguments produce identical bytes downstream.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import boxes, embeddings, network
from .boxes import BoxLayout
from .config import EngineConfig
from .consistency import ConsistencyReport, RuleThresholds, consistency_report
from .errors import DomainError
from .graph import SceneGraph, Vocabulary, build_llm_prompt, edge_prompts, node_prompts
from .network import ModelWeights
from .optimizer import SolveTrace, SolverConfig, refine_layouts, solve_from_graph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthesisResult:
    layouts: list[BoxLayout]
    shape_codes: np.ndarray
    report: ConsistencyReport
    seed: int

    def layouts_json(self) -> list[dict]:
        return [box.to_json_dict(i) for i, box in enumerate(self.layouts)]


@dataclass
class Engine:
    config: EngineConfig = field(default_factory=EngineConfig)
    vocab: Vocabulary | None = None
    weights: ModelWeights | None = None
    embedder: embeddings.EmbeddingProvider | None = None

    def __post_init__(self) -> None:
        if self.vocab is None:
            self.vocab = Vocabulary.default()
        if self.weights is None:
            if self.config.weights_path:
                self.weights = network.load_model_weights(
                    self.config.weights_path, self.config, self.vocab
                )
            else:
                logger.info(
                    "no weights file configured; using seeded random weights (seed=%d)",
                    self.config.seed,
                )
                self.weights = network.seeded_weights(
                    self.config, len(self.vocab.objects), len(self.vocab.relations), self.config.seed
                )
        if self.embedder is None:
            if self.config.embeddings_path:
                self.embedder = embeddings.FileEmbedder.from_file(self.config.embeddings_path)
            else:
                self.embedder = embeddings.HashEmbedder()

    # --- conditioning ------------------------------------------------------

    def _context_vectors(self, prompts: list[str]) -> np.ndarray:
        if not prompts:
            return np.zeros((0, self.config.context_dim))
        return np.stack(
            [self.embedder.embed_text(p, self.config.context_dim) for p in prompts]
        )

    def _conditioning(self, g: SceneGraph):
        node_context = self._context_vectors(node_prompts(g))
        edge_context = self._context_vectors(edge_prompts(g))
        prompt = build_llm_prompt(g)
        global_vec = self.embedder.embed_text(
            prompt.instruction + "\n" + prompt.document, self.config.global_dim
        )
        node_cat, edge_cat = embeddings.embed_categories(
            g, self.weights["embed/objects"], self.weights["embed/relations"]
        )
        return node_cat, edge_cat, node_context, edge_context, global_vec

    # --- verbs -------------------------------------------------------------

    def synthesize(self, g: SceneGraph, seed: int | None = None) -> SynthesisResult:
        """Sample prior latents and decode one layout per node."""
        seed = self.config.seed if seed is None else seed
        node_cat, edge_cat, node_ctx, edge_ctx, global_vec = self._conditioning(g)
        latents = network.sample_prior_latents(g.n_nodes, self.config.q, seed)
        features = embeddings.assemble_inference_features(
            node_cat, latents, node_ctx, edge_cat, edge_ctx, global_vec
        )
        states = network.encode_graph(self.weights, features, network.edge_endpoints(g))
        params, logits = network.decode_layouts(self.weights, states)
        bins = network.predicted_bins(logits)
        layouts = boxes.layouts_from_arrays(params, bins)
        report = consistency_report(g, layouts)
        codes = network.shape_codes(self.weights, states)
        return SynthesisResult(layouts, codes, report, seed)

    def solve(
        self, g: SceneGraph, solver: SolverConfig | None = None
    ) -> tuple[list[BoxLayout], SolveTrace, ConsistencyReport]:
        solver = solver or self.config.solver
        layouts, trace = solve_from_graph(g, solver)
        report = consistency_report(g, layouts)
        return layouts, trace, report

    def refine(
        self,
        initial: list[BoxLayout],
        targets: list[BoxLayout],
        solver: SolverConfig | None = None,
    ) -> tuple[list[BoxLayout], SolveTrace]:
        return refine_layouts(initial, targets, solver or self.config.solver)

    def check(
        self,
        g: SceneGraph,
        layouts: list[BoxLayout] | dict[int, BoxLayout],
        thresholds: RuleThresholds | None = None,
    ) -> ConsistencyReport:
        return consistency_report(g, layouts, thresholds=thresholds)

    def refine_targets(self, g: SceneGraph) -> list[BoxLayout]:
        """Ground-truth layouts as refinement targets; fails if any node lacks one."""
        missing = [n.node_id for n in g.nodes if n.node_id not in g.gt_layouts]
        if missing:
            raise DomainError(
                f"graph provides no target layout for node(s) {missing}",
                path="/gt_layouts",
            )
        return [g.gt_layouts[n.node_id] for n in g.nodes]
