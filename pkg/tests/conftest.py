"""Shared fixtures and graph builders for the test suite."""

from __future__ import annotations

import random

import numpy as np
import pytest

from p3d.boxes import BoxLayout
from p3d.graph import SceneGraph, Vocabulary, parse_scene_graph


@pytest.fixture(scope="session")
def vocab() -> Vocabulary:
    return Vocabulary.default()


def make_bedroom_doc() -> dict:
    return {
        "id": "bedroom",
        "nodes": [
            {"id": 0, "category": "bed"},
            {"id": 1, "category": "nightstand"},
            {"id": 2, "category": "wardrobe"},
        ],
        "edges": [
            {"subject": 1, "predicate": "left of", "object": 0},
            {"subject": 2, "predicate": "bigger than", "object": 1},
            {"subject": 1, "predicate": "close by", "object": 0},
        ],
        "gt_layouts": [
            {"node": 0, "box": [2.0, 1.6, 0.9, 1.0, 0.0, 0.0], "angle_deg": 0},
            {"node": 1, "box": [0.5, 0.4, 0.55, -0.15, -0.8, 0.0], "angle_deg": 0},
            {"node": 2, "box": [1.6, 0.6, 2.1, -1.5, 1.5, 0.0], "angle_deg": 90},
        ],
    }


@pytest.fixture
def bedroom_doc() -> dict:
    return make_bedroom_doc()


@pytest.fixture
def bedroom() -> SceneGraph:
    return parse_scene_graph(make_bedroom_doc())


def random_box(rng: random.Random, span: float = 2.0) -> BoxLayout:
    """Generic box with no tied interval endpoints (with probability 1)."""
    return BoxLayout(
        rng.uniform(0.2, 2.0),
        rng.uniform(0.2, 2.0),
        rng.uniform(0.2, 2.0),
        rng.uniform(-span, span),
        rng.uniform(-span, span),
        rng.uniform(-span / 2, span / 2),
        rng.randrange(24),
    )


def satisfiable_graph(k: int, n_obj: int = 5, n_edges: int = 3) -> SceneGraph:
    """Random furniture scene whose directional edges follow hidden orders,
    so the constraint set is satisfiable by construction."""
    vocab = Vocabulary.default()
    furniture = [c.name for c in vocab.objects if c.name != "floor"]
    rng = random.Random(k)
    cats = [rng.choice(furniture) for _ in range(n_obj)]
    nodes = [{"id": i, "category": c} for i, c in enumerate(cats)]
    orders = {axis: rng.sample(range(n_obj), n_obj) for axis in "xyvh"}
    pairs = [(i, j) for i in range(n_obj) for j in range(i + 1, n_obj)]
    rng.shuffle(pairs)
    edges = []
    for (i, j) in pairs[:n_edges]:
        kind = rng.choice(["x", "y", "v", "h", "close"])
        if kind == "close":
            edges.append({"subject": i, "predicate": "close by", "object": j})
            continue
        order = orders[kind]
        a, b = (i, j) if order.index(i) < order.index(j) else (j, i)
        predicate, subject, obj = {
            "x": ("left of", a, b),
            "y": ("front of", a, b),
            "v": ("bigger than", b, a),
            "h": ("taller than", b, a),
        }[kind]
        edges.append({"subject": subject, "predicate": predicate, "object": obj})
    return parse_scene_graph({"id": f"scene-{k}", "nodes": nodes, "edges": edges})


def assert_allclose(actual, desired, atol=0.0, rtol=1e-7):
    np.testing.assert_allclose(actual, desired, atol=atol, rtol=rtol)
