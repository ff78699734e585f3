"""Geometric rule checks: per-rule truth cases and report aggregation.

Each rule gets closed-form cases on both sides of its threshold, built so
the quantity under test is computable by hand.
"""

from __future__ import annotations

import numpy as np
import pytest

from p3d.boxes import BoxLayout, corner_set_distance, corners
from p3d.consistency import (
    EASY_COLUMNS,
    HARD_COLUMNS,
    RULED_RELATIONS,
    ConsistencyReport,
    RuleThresholds,
    UnruledPredicateError,
    aabb_iou,
    check_edge,
    consistency_report,
    edge_verdicts,
    macro_mean,
    symmetry_distance,
    violation_count,
)
from p3d.graph import parse_scene_graph

T = RuleThresholds()


def unit(cx: float, cy: float, w: float = 1.0, l: float = 1.0, h: float = 1.0):
    return BoxLayout(w, l, h, cx, cy, 0.0)


# --- directional rules --------------------------------------------------------


class TestDirectional:
    def test_left_of_basic(self):
        assert check_edge("left of", unit(-2.0, 0.0), unit(2.0, 0.0))
        assert not check_edge("left of", unit(2.0, 0.0), unit(-2.0, 0.0))

    def test_right_front_behind(self):
        assert check_edge("right of", unit(2.0, 0.0), unit(-2.0, 0.0))
        assert check_edge("front of", unit(0.0, -2.0), unit(0.0, 2.0))
        assert check_edge("behind of", unit(0.0, 2.0), unit(0.0, -2.0))

    def test_equal_centers_fail_strict_compare(self):
        a, b = unit(0.0, 0.0), unit(0.0, 5.0)
        assert not check_edge("left of", a, b)
        assert not check_edge("right of", a, b)

    def test_overlap_gate(self):
        # centers differ but the boxes interpenetrate heavily: IoU gate kills it
        a = BoxLayout(2.0, 2.0, 2.0, -0.1, 0.0, 0.0)
        b = BoxLayout(2.0, 2.0, 2.0, 0.1, 0.0, 0.0)
        assert aabb_iou(a, b) > T.iou_max
        assert not check_edge("left of", a, b)

    def test_gate_boundary_exact(self):
        """IoU exactly at the threshold fails (gate is >=)."""
        # unit cubes offset on x by d: IoU = (1-d)/(1+d); 0.3 at d = 7/13
        d = 7.0 / 13.0
        a, b = unit(0.0, 0.0), unit(d, 0.0)
        got = aabb_iou(a, b)
        assert got == pytest.approx(0.3, abs=1e-12)
        thr = RuleThresholds(iou_max=got)  # make the tie bit-exact
        assert not check_edge("left of", a, b, thr)
        # nudge apart: gate opens, order is correct
        assert check_edge("left of", unit(0.0, 0.0), unit(d + 1e-6, 0.0), thr)

    def test_yaw_ignored_by_gate(self):
        a = BoxLayout(1.0, 1.0, 1.0, -2.0, 0.0, 0.0, 6)
        b = BoxLayout(1.0, 1.0, 1.0, 2.0, 0.0, 0.0, 18)
        assert check_edge("left of", a, b)


# --- size and height rules -----------------------------------------------------


class TestVolumeRatio:
    def test_bigger_than_clear_cases(self):
        big = BoxLayout(2.0, 2.0, 2.0, 0, 0, 0)  # volume 8
        small = BoxLayout(1.0, 1.0, 1.0, 5, 5, 0)  # volume 1
        assert check_edge("bigger than", big, small)
        assert not check_edge("bigger than", small, big)
        assert check_edge("smaller than", small, big)
        assert not check_edge("smaller than", big, small)

    def test_threshold_boundary(self):
        """(v_i - v_j) / v_i must exceed the ratio strictly.

        0.25 is float-exact, so the tie is representable: with v_i = 1 and
        v_j = 0.75 the ratio computes to exactly 0.25 and must not count.
        """
        thr = RuleThresholds(size_ratio=0.25)
        at = BoxLayout(1.0, 1.0, 0.75, 5, 5, 0)
        assert not check_edge("bigger than", unit(0, 0), at, thr)
        over = BoxLayout(1.0, 1.0, 0.75 - 1e-9, 5, 5, 0)
        assert check_edge("bigger than", unit(0, 0), over, thr)

    def test_smaller_than_boundary(self):
        # ratio = (1 - v_j) / 1 < -0.15 needs v_j > 1.15
        assert not check_edge("smaller than", unit(0, 0), BoxLayout(1.0, 1.0, 1.15, 5, 5, 0))
        assert check_edge("smaller than", unit(0, 0), BoxLayout(1.0, 1.0, 1.15 + 1e-9, 5, 5, 0))

    def test_equal_volumes_are_neither(self):
        a, b = unit(0, 0), unit(3, 0)
        assert not check_edge("bigger than", a, b)
        assert not check_edge("smaller than", a, b)


class TestHeightRatio:
    def test_taller_shorter_clear_cases(self):
        tall = BoxLayout(1.0, 1.0, 2.0, 0, 0, 0)
        short = BoxLayout(1.0, 1.0, 0.5, 3, 0, 0)
        assert check_edge("taller than", tall, short)
        assert check_edge("shorter than", short, tall)
        assert not check_edge("taller than", short, tall)
        assert not check_edge("shorter than", tall, short)

    def test_top_height_not_extent(self):
        """The rule compares top faces, so elevation counts."""
        floated = BoxLayout(1.0, 1.0, 0.5, 0, 0, 1.0)  # top at 1.5
        grounded = BoxLayout(1.0, 1.0, 1.0, 3, 0, 0.0)  # top at 1.0
        assert check_edge("taller than", floated, grounded)

    def test_threshold_boundary(self):
        # (top_i - top_j) / top_i with top_i = 1: top_j = 0.9 gives exactly 0.1
        assert not check_edge("taller than", unit(0, 0), BoxLayout(1, 1, 0.9, 3, 0, 0))
        assert check_edge("taller than", unit(0, 0), BoxLayout(1, 1, 0.9 - 1e-9, 3, 0, 0))


# --- proximity and symmetry -----------------------------------------------------


class TestCloseBy:
    def test_touching_boxes_are_close(self):
        # nearest corners 0.2 apart: well under 0.45
        assert check_edge("close by", unit(0, 0), unit(1.2, 0))

    def test_far_boxes_are_not(self):
        assert not check_edge("close by", unit(0, 0), unit(5.0, 0))

    def test_threshold_boundary(self):
        """The cutoff is a strict <; an exact tie does not count as close.

        A gap of 0.5 between unit cubes computes exactly in floats (corner
        x-coordinates 0.5 and 1.0), so with dist_max = 0.5 the tie is real.
        """
        thr = RuleThresholds(dist_max=0.5)
        assert not check_edge("close by", unit(0, 0), unit(1.5, 0), thr)
        assert check_edge("close by", unit(0, 0), unit(1.5 - 1e-9, 0), thr)

    def test_matched_mean_mode_is_stricter_here(self):
        a, b = unit(0, 0), unit(1.4, 0)
        assert corner_set_distance(corners(a), corners(b), "min_pair") < T.dist_max
        assert corner_set_distance(corners(a), corners(b), "matched_mean") > T.dist_max
        assert check_edge("close by", a, b, close_mode="min_pair")
        assert not check_edge("close by", a, b, close_mode="matched_mean")


class TestSymmetry:
    def test_mirror_across_y_axis(self):
        # flip("y") negates cx and maps bin b to (12 - b) mod 24
        a = BoxLayout(1.0, 2.0, 1.0, -1.0, 0.5, 0.0, 3)
        b = BoxLayout(1.0, 2.0, 1.0, 1.0, 0.5, 0.0, 9)
        assert symmetry_distance(a, b) == pytest.approx(0.0, abs=1e-12)
        assert check_edge("symmetrical to", a, b)

    def test_mirror_across_x_axis(self):
        # flip("x") negates cy and maps bin b to (24 - b) mod 24
        a = BoxLayout(1.0, 2.0, 1.0, 0.5, -1.0, 0.0, 5)
        b = BoxLayout(1.0, 2.0, 1.0, 0.5, 1.0, 0.0, 19)
        assert symmetry_distance(a, b) == pytest.approx(0.0, abs=1e-12)
        assert check_edge("symmetrical to", a, b)

    def test_best_of_both_axes(self):
        """The score is the minimum over the two mirror hypotheses."""
        import random

        from conftest import random_box
        from p3d.boxes import flip

        rng = random.Random(21)
        for _ in range(20):
            a, b = random_box(rng), random_box(rng)
            want = min(
                corner_set_distance(corners(flip(a, "x")), corners(b), "matched_mean"),
                corner_set_distance(corners(flip(a, "y")), corners(b), "matched_mean"),
            )
            assert symmetry_distance(a, b) == pytest.approx(want, abs=1e-12)

    def test_asymmetric_pair_fails(self):
        a = BoxLayout(1.0, 1.0, 1.0, -2.0, 0.0, 0.0, 0)
        b = BoxLayout(0.4, 0.4, 2.5, 2.0, 1.5, 0.0, 4)
        assert not check_edge("symmetrical to", a, b)


# --- unruled predicates ----------------------------------------------------------


def test_unruled_predicates_raise():
    for predicate in ("above", "standing on", "attached to"):
        with pytest.raises(UnruledPredicateError):
            check_edge(predicate, unit(0, 0), unit(2, 0))


def test_ruled_relation_inventory():
    assert len(RULED_RELATIONS) == 10
    assert set(EASY_COLUMNS) == {"left/right", "front/behind", "big/small", "tall/short"}
    assert set(HARD_COLUMNS) == {"close", "symmetrical"}


# --- report construction -----------------------------------------------------------


def _scene(edges, boxes):
    nodes = [{"id": i, "category": "cabinet"} for i in range(len(boxes))]
    g = parse_scene_graph({"id": "t", "nodes": nodes, "edges": edges})
    layouts = list(boxes)
    return g, layouts


def test_report_all_satisfied():
    g, layouts = _scene(
        [
            {"subject": 0, "predicate": "left of", "object": 1},
            {"subject": 1, "predicate": "right of", "object": 0},
            {"subject": 0, "predicate": "close by", "object": 1},
        ],
        [unit(-0.7, 0.0), unit(0.7, 0.0)],
    )
    rep = consistency_report(g, layouts)
    assert rep.checked_edges == 3
    assert rep.satisfied_edges == 3
    assert rep.skipped_edges == 0
    assert rep.msg_micro == 1.0
    assert rep.msg_macro == 1.0
    assert rep.easy_mean == 1.0
    assert rep.hard_mean == 1.0
    assert violation_count(g, layouts) == 0


def test_report_macro_is_unweighted_column_mean():
    """Four left/right checks at 50% plus one perfect close check.

    Micro pools edges: 3/5. Macro averages columns: (0.5 + 1.0) / 2.
    """
    g, layouts = _scene(
        [
            {"subject": 0, "predicate": "left of", "object": 1},
            {"subject": 0, "predicate": "left of", "object": 1},
            {"subject": 1, "predicate": "left of", "object": 0},
            {"subject": 1, "predicate": "left of", "object": 0},
            {"subject": 0, "predicate": "close by", "object": 1},
        ],
        [unit(-0.7, 0.0), unit(0.7, 0.0)],
    )
    rep = consistency_report(g, layouts)
    assert rep.msg_micro == pytest.approx(3 / 5)
    assert rep.msg_macro == pytest.approx((0.5 + 1.0) / 2)
    assert rep.column_accuracy["left/right"] == pytest.approx(0.5)
    assert rep.column_accuracy["close"] == 1.0
    assert rep.easy_mean == pytest.approx(0.5)
    assert rep.hard_mean == 1.0
    assert violation_count(g, layouts) == 2


def test_report_reference_row_average():
    """Frozen column accuracies averaging to the published headline number."""
    columns = {
        "left/right": 0.98,
        "front/behind": 0.97,
        "big/small": 0.75,
        "tall/short": 0.92,
        "close": 0.89,
        "symmetrical": 0.84,
    }
    assert macro_mean(columns) == pytest.approx(0.8917, abs=5e-5)


def test_report_skips_unruled_edges():
    g, layouts = _scene(
        [
            {"subject": 0, "predicate": "left of", "object": 1},
            {"subject": 0, "predicate": "standing on", "object": 1},
        ],
        [unit(-0.7, 0.0), unit(0.7, 0.0)],
    )
    rep = consistency_report(g, layouts)
    assert rep.checked_edges == 1
    assert rep.skipped_edges == 1
    assert rep.msg_micro == 1.0


def test_report_empty_graph_has_none_means():
    g, layouts = _scene([], [unit(0, 0)])
    rep = consistency_report(g, layouts)
    assert rep.checked_edges == 0
    assert rep.msg_macro is None
    assert rep.msg_micro is None
    assert violation_count(g, layouts) == 0


def test_report_accepts_layout_mapping(bedroom):
    rep = consistency_report(bedroom, bedroom.gt_layouts)
    assert rep.checked_edges == 3


def test_edge_verdicts_align_with_edges():
    g, layouts = _scene(
        [
            {"subject": 0, "predicate": "left of", "object": 1},
            {"subject": 1, "predicate": "left of", "object": 0},
            {"subject": 0, "predicate": "standing on", "object": 1},
        ],
        [unit(-0.7, 0.0), unit(0.7, 0.0)],
    )
    assert edge_verdicts(g, layouts) == ["satisfied", "violated", "skipped"]


def test_report_json_shape():
    g, layouts = _scene(
        [{"subject": 0, "predicate": "left of", "object": 1}],
        [unit(-0.7, 0.0), unit(0.7, 0.0)],
    )
    d = consistency_report(g, layouts).to_json_dict()
    assert d["checked_edges"] == 1
    assert d["per_relation"]["left of"]["accuracy"] == 1.0
    assert d["msg_macro"] == 1.0
    assert d["close_mode"] == "min_pair"


def test_report_format_table_mentions_columns():
    g, layouts = _scene(
        [{"subject": 0, "predicate": "left of", "object": 1}],
        [unit(-0.7, 0.0), unit(0.7, 0.0)],
    )
    text = consistency_report(g, layouts).format_table()
    for label in ("left of", "close by", "macro", "micro", "close=min_pair"):
        assert label in text


def test_macro_mean_skips_missing_columns():
    assert macro_mean({"left/right": 1.0}) == 1.0
    assert macro_mean({}) is None
