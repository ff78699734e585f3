"""Scene-graph parsing, validation paths, serialization, and prompt text."""

from __future__ import annotations

import json

import pytest

from p3d.errors import DomainError, SchemaError
from p3d.graph import (
    SceneGraph,
    Vocabulary,
    build_llm_prompt,
    default_category_sizes,
    edge_prompts,
    graph_document,
    node_prompts,
    parse_scene_graph,
    scene_graph_to_dict,
    serialize_scene_graph,
    triplets,
)


def test_default_vocabulary_counts(vocab):
    assert len(vocab.objects) == 35
    assert len(vocab.relations) == 15
    assert vocab.has_object("bed")
    assert vocab.has_relation("left of")
    # ids are dense and ordered
    assert [o.id for o in vocab.objects] == list(range(35))
    assert [r.id for r in vocab.relations] == list(range(15))


def test_relation_tiers(vocab):
    tiers = {r.name: r.tier for r in vocab.relations}
    assert tiers["left of"] == "easy"
    assert tiers["close by"] == "hard"
    assert tiers["symmetrical to"] == "hard"


def test_parse_round_trip(bedroom):
    text = serialize_scene_graph(bedroom)
    again = parse_scene_graph(text)
    assert again == bedroom
    assert serialize_scene_graph(again) == text


def test_parse_accepts_dict_and_string(bedroom_doc):
    from_dict = parse_scene_graph(bedroom_doc)
    from_str = parse_scene_graph(json.dumps(bedroom_doc))
    assert from_dict == from_str


def test_invalid_json_is_schema_error():
    with pytest.raises(SchemaError) as exc:
        parse_scene_graph("{not json")
    assert exc.value.path == "/"


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda d: d.pop("id"), "/id"),
        (lambda d: d.update(id=7), "/id"),
        (lambda d: d.pop("nodes"), "/nodes"),
        (lambda d: d.update(nodes={}), "/nodes"),
        (lambda d: d["nodes"].__setitem__(0, "bed"), "/nodes/0"),
        (lambda d: d["nodes"][1].pop("category"), "/nodes/1"),
        (lambda d: d["nodes"][1].update(id=True), "/nodes/1/id"),
        (lambda d: d.update(edges="none"), "/edges"),
        (lambda d: d["edges"][0].pop("predicate"), "/edges/0"),
        (lambda d: d["edges"][0].update(subject="bed"), "/edges/0/subject"),
        (lambda d: d["gt_layouts"][0].update(box=[1, 2, 3]), "/gt_layouts/0/box"),
        (lambda d: d["gt_layouts"][0].pop("angle_deg"), "/gt_layouts/0"),
    ],
)
def test_schema_errors_carry_paths(bedroom_doc, mutate, path):
    mutate(bedroom_doc)
    with pytest.raises(SchemaError) as exc:
        parse_scene_graph(bedroom_doc)
    assert exc.value.path == path


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda d: d["nodes"][0].update(category="spaceship"), "/nodes/0/category"),
        (lambda d: d["edges"][0].update(predicate="orbits"), "/edges/0/predicate"),
        (lambda d: d["edges"][0].update(object=99), "/edges/0/object"),
        (lambda d: d["edges"][0].update(object=1), "/edges/0"),  # self-edge
        (lambda d: d["nodes"][2].update(id=5), "/nodes"),  # non-dense ids
        (lambda d: d["nodes"][2].update(id=0), "/nodes"),  # duplicate ids
        (lambda d: d.update(nodes=[]), "/nodes"),
        (lambda d: d["gt_layouts"][0].update(node=42), "/gt_layouts"),
        (
            lambda d: d["gt_layouts"].append(dict(d["gt_layouts"][0])),
            "/gt_layouts/3/node",  # duplicate layout for a node
        ),
        (
            lambda d: d["gt_layouts"][0]["box"].__setitem__(0, -1.0),
            "/gt_layouts/0/box",  # negative extent
        ),
    ],
)
def test_domain_errors_carry_paths(bedroom_doc, mutate, path):
    mutate(bedroom_doc)
    with pytest.raises(DomainError) as exc:
        parse_scene_graph(bedroom_doc)
    assert exc.value.path == path


def test_gt_layout_angles_are_binned(bedroom):
    assert bedroom.gt_layouts is not None
    assert bedroom.gt_layouts[2].angle_bin == 6  # stored as 90 degrees
    assert bedroom.gt_layouts[2].angle_deg == pytest.approx(90.0)
    assert bedroom.gt_layouts[0].angle_bin == 0


def test_triplets_and_document(bedroom):
    trips = triplets(bedroom)
    assert trips[0] == ("nightstand", "left of", "bed")
    doc = graph_document(bedroom)
    assert doc.startswith("nightstand left of bed. ")
    assert doc.endswith(".")
    assert doc.count(". ") == bedroom.n_edges - 1


def test_graph_document_empty_without_edges(vocab):
    g = parse_scene_graph({"id": "solo", "nodes": [{"id": 0, "category": "bed"}]})
    assert graph_document(g) == ""
    assert g.n_edges == 0


def test_llm_prompt_pair(bedroom):
    pair = build_llm_prompt(bedroom)
    assert pair.instruction == "Represent the Science document for summarization"
    assert pair.document == graph_document(bedroom)


def test_node_and_edge_prompts(bedroom):
    assert node_prompts(bedroom) == ["bed", "nightstand", "wardrobe"]
    prompts = edge_prompts(bedroom)
    assert len(prompts) == bedroom.n_edges
    assert prompts[0] == "nightstand left of bed"


def test_scene_graph_constructor_validates():
    from p3d.graph import SceneEdge, SceneNode

    vocab = Vocabulary.default()
    bed = SceneNode(0, vocab.object_category("bed"))
    with pytest.raises(DomainError):
        SceneGraph("g", [])
    with pytest.raises(DomainError):
        SceneGraph("g", [bed], [SceneEdge(0, vocab.relation_category("left of"), 3)])


def test_serialization_is_canonical(bedroom):
    text = serialize_scene_graph(bedroom)
    assert text.endswith("\n")
    parsed = json.loads(text)
    assert parsed == scene_graph_to_dict(bedroom)
    # keys are sorted at every level
    assert list(parsed) == sorted(parsed)


def test_default_sizes_cover_vocabulary(vocab):
    sizes = default_category_sizes()
    for cat in vocab.objects:
        assert cat.name in sizes
        w, l, h = sizes[cat.name]
        assert w > 0 and l > 0 and h > 0


def test_vocab_from_lists_rejects_duplicates():
    with pytest.raises(ValueError):
        Vocabulary.from_lists(["bed", "bed"], [{"name": "left of", "tier": "easy"}])
