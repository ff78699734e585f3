"""Scene graphs: category vocabularies, validation, JSON wire format, prompts.

A scene graph is a set of N >= 1 object nodes with dense integer ids 0..N-1
and M >= 0 directed edges labelled with relation categories. Ground-truth
layouts may ride along for training-style feature assembly and for use as
refinement targets.

JSON schema (all lengths in meters, angles in degrees):

    {
      "id": "scene-0",
      "nodes": [{"id": 0, "category": "chair"}, ...],
      "edges": [{"subject": 0, "predicate": "left of", "object": 1}, ...],
      "gt_layouts": [{"node": 0, "box": [w, l, h, cx, cy, cz],
                      "angle_deg": 0.0}, ...]   // optional
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import NamedTuple

from .boxes import BoxLayout, bin_angle
from .errors import DomainError, SchemaError

EASY_TIER = "easy"
HARD_TIER = "hard"


@dataclass(frozen=True)
class ObjectCategory:
    id: int
    name: str


@dataclass(frozen=True)
class RelationCategory:
    id: int
    name: str
    # easy/hard for relations covered by a geometric rule; None otherwise.
    tier: str | None = None


class Vocabulary:
    """Ordered object and relation category lists with name lookup."""

    def __init__(self, objects: list[ObjectCategory], relations: list[RelationCategory]):
        if not objects or not relations:
            raise ValueError("vocabulary needs at least one object and one relation category")
        self.objects = list(objects)
        self.relations = list(relations)
        self._object_by_name = {c.name: c for c in self.objects}
        self._relation_by_name = {r.name: r for r in self.relations}
        if len(self._object_by_name) != len(self.objects):
            raise ValueError("duplicate object category names")
        if len(self._relation_by_name) != len(self.relations):
            raise ValueError("duplicate relation category names")

    @classmethod
    def from_lists(cls, object_names: list[str], relations: list[dict]) -> "Vocabulary":
        objects = [ObjectCategory(i, str(name)) for i, name in enumerate(object_names)]
        rels = [
            RelationCategory(i, str(r["name"]), r.get("tier"))
            for i, r in enumerate(relations)
        ]
        return cls(objects, rels)

    @classmethod
    def from_files(cls, objects_path: str, relations_path: str) -> "Vocabulary":
        with open(objects_path, "r", encoding="utf-8") as fh:
            object_names = json.load(fh)
        with open(relations_path, "r", encoding="utf-8") as fh:
            relations = json.load(fh)
        return cls.from_lists(object_names, relations)

    @classmethod
    def default(cls) -> "Vocabulary":
        return _default_vocabulary()

    def object_category(self, name: str) -> ObjectCategory:
        try:
            return self._object_by_name[name]
        except KeyError:
            raise KeyError(f"unknown object category {name!r}") from None

    def relation_category(self, name: str) -> RelationCategory:
        try:
            return self._relation_by_name[name]
        except KeyError:
            raise KeyError(f"unknown relation category {name!r}") from None

    def has_object(self, name: str) -> bool:
        return name in self._object_by_name

    def has_relation(self, name: str) -> bool:
        return name in self._relation_by_name


@lru_cache(maxsize=1)
def _default_vocabulary() -> Vocabulary:
    data = resources.files("p3d.data")
    object_names = json.loads(data.joinpath("objects.json").read_text(encoding="utf-8"))
    relations = json.loads(data.joinpath("relations.json").read_text(encoding="utf-8"))
    return Vocabulary.from_lists(object_names, relations)


@lru_cache(maxsize=1)
def default_category_sizes() -> dict[str, tuple[float, float, float]]:
    """Nominal (w, l, h) extents per object category, used to seed the solver."""
    data = resources.files("p3d.data")
    raw = json.loads(data.joinpath("default_sizes.json").read_text(encoding="utf-8"))
    return {name: (float(s[0]), float(s[1]), float(s[2])) for name, s in raw.items()}


@dataclass(frozen=True)
class SceneNode:
    node_id: int
    category: ObjectCategory


@dataclass(frozen=True)
class SceneEdge:
    subject: int
    predicate: RelationCategory
    object: int


class RelationshipTriplet(NamedTuple):
    subject_name: str
    predicate_name: str
    object_name: str


class PromptPair(NamedTuple):
    instruction: str
    document: str


@dataclass
class SceneGraph:
    """Validated scene graph; construction enforces every structural invariant."""

    graph_id: str
    nodes: list[SceneNode]
    edges: list[SceneEdge] = field(default_factory=list)
    gt_layouts: dict[int, BoxLayout] | None = None

    def __post_init__(self) -> None:
        if not self.nodes:
            raise DomainError("scene graph has no nodes; N >= 1 violated", "/nodes")
        ids = [n.node_id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise DomainError("duplicate node ids", "/nodes")
        if set(ids) != set(range(len(ids))):
            raise DomainError(
                f"node ids must be dense from 0, got {sorted(ids)}", "/nodes"
            )
        self.nodes = sorted(self.nodes, key=lambda n: n.node_id)
        valid = set(ids)
        for k, e in enumerate(self.edges):
            for side in ("subject", "object"):
                ref = getattr(e, side)
                if ref not in valid:
                    raise DomainError(
                        f"dangling endpoint: edge {k} {side} references node {ref}",
                        f"/edges/{k}/{side}",
                    )
            if e.subject == e.object:
                raise DomainError(
                    f"self-edge on node {e.subject} is not allowed", f"/edges/{k}"
                )
        if self.gt_layouts is not None:
            for node_id in self.gt_layouts:
                if node_id not in valid:
                    raise DomainError(
                        f"gt layout references unknown node {node_id}", "/gt_layouts"
                    )

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def node(self, node_id: int) -> SceneNode:
        return self.nodes[node_id]


def _require(condition: bool, message: str, path: str) -> None:
    if not condition:
        raise SchemaError(message, path)


def parse_scene_graph(document: str | dict, vocab: Vocabulary | None = None) -> SceneGraph:
    """Parse and validate a scene-graph JSON document.

    Raises SchemaError when the document shape is wrong and DomainError when
    the content violates graph rules (unknown categories, dangling edges,
    non-dense ids, self-edges).
    """
    vocab = vocab or Vocabulary.default()
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", "/") from exc
    else:
        doc = document
    _require(isinstance(doc, dict), "document must be a JSON object", "/")
    _require("id" in doc, "missing required key 'id'", "/id")
    _require(isinstance(doc["id"], str), "'id' must be a string", "/id")
    _require("nodes" in doc, "missing required key 'nodes'", "/nodes")
    _require(isinstance(doc["nodes"], list), "'nodes' must be an array", "/nodes")

    nodes: list[SceneNode] = []
    for k, raw in enumerate(doc["nodes"]):
        path = f"/nodes/{k}"
        _require(isinstance(raw, dict), "node must be an object", path)
        _require("id" in raw and "category" in raw, "node needs 'id' and 'category'", path)
        _require(isinstance(raw["id"], int) and not isinstance(raw["id"], bool),
                 "node 'id' must be an integer", f"{path}/id")
        _require(isinstance(raw["category"], str), "node 'category' must be a string",
                 f"{path}/category")
        if not vocab.has_object(raw["category"]):
            raise DomainError(
                f"unknown object category {raw['category']!r}", f"{path}/category"
            )
        nodes.append(SceneNode(raw["id"], vocab.object_category(raw["category"])))

    edges: list[SceneEdge] = []
    raw_edges = doc.get("edges", [])
    _require(isinstance(raw_edges, list), "'edges' must be an array", "/edges")
    for k, raw in enumerate(raw_edges):
        path = f"/edges/{k}"
        _require(isinstance(raw, dict), "edge must be an object", path)
        for key in ("subject", "predicate", "object"):
            _require(key in raw, f"edge needs '{key}'", path)
        for key in ("subject", "object"):
            _require(isinstance(raw[key], int) and not isinstance(raw[key], bool),
                     f"edge '{key}' must be an integer", f"{path}/{key}")
        _require(isinstance(raw["predicate"], str), "edge 'predicate' must be a string",
                 f"{path}/predicate")
        if not vocab.has_relation(raw["predicate"]):
            raise DomainError(
                f"unknown relation category {raw['predicate']!r}", f"{path}/predicate"
            )
        edges.append(
            SceneEdge(raw["subject"], vocab.relation_category(raw["predicate"]), raw["object"])
        )

    gt_layouts: dict[int, BoxLayout] | None = None
    if "gt_layouts" in doc and doc["gt_layouts"] is not None:
        raw_layouts = doc["gt_layouts"]
        _require(isinstance(raw_layouts, list), "'gt_layouts' must be an array", "/gt_layouts")
        gt_layouts = {}
        for k, raw in enumerate(raw_layouts):
            path = f"/gt_layouts/{k}"
            _require(isinstance(raw, dict), "layout must be an object", path)
            for key in ("node", "box", "angle_deg"):
                _require(key in raw, f"layout needs '{key}'", path)
            _require(isinstance(raw["node"], int) and not isinstance(raw["node"], bool),
                     "layout 'node' must be an integer", f"{path}/node")
            box = raw["box"]
            _require(
                isinstance(box, list) and len(box) == 6
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in box),
                "layout 'box' must be [w, l, h, cx, cy, cz]",
                f"{path}/box",
            )
            _require(isinstance(raw["angle_deg"], (int, float)),
                     "layout 'angle_deg' must be a number", f"{path}/angle_deg")
            if raw["node"] in gt_layouts:
                raise DomainError(f"duplicate layout for node {raw['node']}", f"{path}/node")
            try:
                layout = BoxLayout(
                    float(box[0]), float(box[1]), float(box[2]),
                    float(box[3]), float(box[4]), float(box[5]),
                    bin_angle(float(raw["angle_deg"])),
                )
            except ValueError as exc:
                raise DomainError(str(exc), f"{path}/box") from exc
            gt_layouts[raw["node"]] = layout

    return SceneGraph(doc["id"], nodes, edges, gt_layouts)


def scene_graph_to_dict(g: SceneGraph) -> dict:
    doc: dict = {
        "id": g.graph_id,
        "nodes": [{"id": n.node_id, "category": n.category.name} for n in g.nodes],
        "edges": [
            {"subject": e.subject, "predicate": e.predicate.name, "object": e.object}
            for e in g.edges
        ],
    }
    if g.gt_layouts is not None:
        doc["gt_layouts"] = [
            {
                "node": node_id,
                "box": [b.w, b.l, b.h, b.cx, b.cy, b.cz],
                "angle_deg": b.angle_deg,
            }
            for node_id, b in sorted(g.gt_layouts.items())
        ]
    return doc


def serialize_scene_graph(g: SceneGraph) -> str:
    """Serialize to canonical JSON; parse(serialize(g)) reproduces g exactly."""
    return json.dumps(scene_graph_to_dict(g), indent=2, sort_keys=True) + "\n"


def triplets(g: SceneGraph) -> list[RelationshipTriplet]:
    """Edge list as (subject name, predicate name, object name) triplets."""
    return [
        RelationshipTriplet(
            g.node(e.subject).category.name, e.predicate.name, g.node(e.object).category.name
        )
        for e in g.edges
    ]


def graph_document(g: SceneGraph) -> str:
    """The graph's relationships as a text document.

    Each triplet becomes a "subject predicate object" clause; clauses are
    joined by ". " and the document ends with a period. A graph without
    edges yields the empty string.
    """
    clauses = [" ".join(t) for t in triplets(g)]
    if not clauses:
        return ""
    return ". ".join(clauses) + "."


def build_llm_prompt(
    g: SceneGraph,
    domain: str = "Science",
    text_type: str = "document",
    task: str = "summarization",
) -> PromptPair:
    """Instruction/document pair for the graph-level text embedding."""
    instruction = f"Represent the {domain} {text_type} for {task}"
    return PromptPair(instruction, graph_document(g))


def node_prompts(g: SceneGraph) -> list[str]:
    """Per-node context prompts: the object category names."""
    return [n.category.name for n in g.nodes]


def edge_prompts(g: SceneGraph) -> list[str]:
    """Per-edge context prompts: one "subject predicate object" clause each."""
    return [" ".join(t) for t in triplets(g)]
