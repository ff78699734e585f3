"""Geometric consistency rules for directed scene-graph edges.

Each ruled relation maps to a predicate over the two boxes' world-frame
geometry. Directions follow the world frame in `boxes`: +x is right, +y is
front, z is up; all comparisons are strict.

    left of      x_i < x_j        and IoU < iou_max
    right of     x_i > x_j        and IoU < iou_max
    front of     y_i < y_j        and IoU < iou_max
    behind of    y_i > y_j        and IoU < iou_max
    bigger than  (V_i - V_j)/V_i  >  size_ratio
    smaller than (V_i - V_j)/V_i  < -size_ratio
    taller than  (T_i - T_j)/T_i  >  height_ratio   (T = top face height)
    shorter than (T_i - T_j)/T_i  < -height_ratio
    close by     min-pair corner distance < dist_max
    symmetrical to   best over x/y flips of matched-mean corner distance < dist_max

Five relations (above, standing on, same style/super category/material as)
carry no geometric rule; reports count them as skipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .boxes import BoxLayout, aabb_iou, corner_set_distance, corners, flip
from .graph import SceneGraph

RULED_RELATIONS = (
    "left of",
    "right of",
    "front of",
    "behind of",
    "bigger than",
    "smaller than",
    "taller than",
    "shorter than",
    "close by",
    "symmetrical to",
)

# Column grouping used by the benchmark-style aggregate: four easy columns,
# two hard ones. Macro accuracy is the unweighted mean over the six.
RULE_COLUMNS: dict[str, tuple[str, ...]] = {
    "left/right": ("left of", "right of"),
    "front/behind": ("front of", "behind of"),
    "big/small": ("bigger than", "smaller than"),
    "tall/short": ("taller than", "shorter than"),
    "close": ("close by",),
    "symmetrical": ("symmetrical to",),
}
EASY_COLUMNS = ("left/right", "front/behind", "big/small", "tall/short")
HARD_COLUMNS = ("close", "symmetrical")

DEFAULT_CLOSE_MODE = "min_pair"
DEFAULT_SYMMETRY_MODE = "matched_mean"


class UnruledPredicateError(ValueError):
    """Raised when a relation has no geometric rule to check."""


@dataclass(frozen=True)
class RuleThresholds:
    """Rule cut-offs; lengths are meters on world-frame boxes."""

    iou_max: float = 0.3
    size_ratio: float = 0.15
    height_ratio: float = 0.1
    dist_max: float = 0.45


def symmetry_distance(box_i: BoxLayout, box_j: BoxLayout, mode: str = DEFAULT_SYMMETRY_MODE) -> float:
    """Corner distance between box_j and the better axis-flip of box_i."""
    corners_j = corners(box_j)
    return min(
        corner_set_distance(corners(flip(box_i, axis)), corners_j, mode)
        for axis in ("x", "y")
    )


def check_edge(
    predicate: str,
    box_i: BoxLayout,
    box_j: BoxLayout,
    thresholds: RuleThresholds | None = None,
    close_mode: str = DEFAULT_CLOSE_MODE,
    symmetry_mode: str = DEFAULT_SYMMETRY_MODE,
) -> bool:
    """Does the directed edge i -> j hold geometrically for these boxes?"""
    t = thresholds or RuleThresholds()
    if predicate in ("left of", "right of", "front of", "behind of"):
        if aabb_iou(box_i, box_j) >= t.iou_max:
            return False
        if predicate == "left of":
            return box_i.cx < box_j.cx
        if predicate == "right of":
            return box_i.cx > box_j.cx
        if predicate == "front of":
            return box_i.cy < box_j.cy
        return box_i.cy > box_j.cy
    if predicate in ("bigger than", "smaller than"):
        ratio = (box_i.volume - box_j.volume) / box_i.volume
        return ratio > t.size_ratio if predicate == "bigger than" else ratio < -t.size_ratio
    if predicate in ("taller than", "shorter than"):
        ratio = (box_i.top - box_j.top) / box_i.top
        return ratio > t.height_ratio if predicate == "taller than" else ratio < -t.height_ratio
    if predicate == "close by":
        return corner_set_distance(corners(box_i), corners(box_j), close_mode) < t.dist_max
    if predicate == "symmetrical to":
        return symmetry_distance(box_i, box_j, symmetry_mode) < t.dist_max
    raise UnruledPredicateError(f"relation {predicate!r} has no geometric rule")


@dataclass
class RelationStats:
    checked: int = 0
    satisfied: int = 0

    @property
    def accuracy(self) -> float | None:
        return self.satisfied / self.checked if self.checked else None


@dataclass
class ConsistencyReport:
    """Rule outcomes for one scene: per-relation counts plus aggregates.

    ``msg_macro`` is the unweighted mean over the six rule columns (each
    column pools its one or two relations); ``msg_micro`` is total satisfied
    over total checked. Columns with nothing to check are left out of the
    means, which are None when nothing at all was checked.
    """

    per_relation: dict[str, RelationStats] = field(default_factory=dict)
    column_accuracy: dict[str, float] = field(default_factory=dict)
    easy_mean: float | None = None
    hard_mean: float | None = None
    msg_macro: float | None = None
    msg_micro: float | None = None
    checked_edges: int = 0
    satisfied_edges: int = 0
    skipped_edges: int = 0
    close_mode: str = DEFAULT_CLOSE_MODE
    symmetry_mode: str = DEFAULT_SYMMETRY_MODE

    def to_json_dict(self) -> dict:
        return {
            "per_relation": {
                name: {
                    "checked": s.checked,
                    "satisfied": s.satisfied,
                    "accuracy": s.accuracy,
                }
                for name, s in sorted(self.per_relation.items())
            },
            "column_accuracy": dict(sorted(self.column_accuracy.items())),
            "easy_mean": self.easy_mean,
            "hard_mean": self.hard_mean,
            "msg_macro": self.msg_macro,
            "msg_micro": self.msg_micro,
            "checked_edges": self.checked_edges,
            "satisfied_edges": self.satisfied_edges,
            "skipped_edges": self.skipped_edges,
            "close_mode": self.close_mode,
            "symmetry_mode": self.symmetry_mode,
        }

    def format_table(self) -> str:
        lines = [f"{'relation':<24} {'checked':>8} {'satisfied':>10} {'accuracy':>9}"]
        for name, s in sorted(self.per_relation.items()):
            acc = f"{s.accuracy:.4f}" if s.accuracy is not None else "-"
            lines.append(f"{name:<24} {s.checked:>8} {s.satisfied:>10} {acc:>9}")

        def show(v: float | None) -> str:
            return f"{v:.4f}" if v is not None else "-"

        lines.append(
            f"easy {show(self.easy_mean)}  hard {show(self.hard_mean)}  "
            f"macro {show(self.msg_macro)}  micro {show(self.msg_micro)}  "
            f"skipped {self.skipped_edges}"
        )
        lines.append(f"distance modes: close={self.close_mode} symmetry={self.symmetry_mode}")
        return "\n".join(lines)


def macro_mean(column_accuracies: dict[str, float]) -> float | None:
    """Unweighted mean over the rule columns that have an accuracy."""
    values = list(column_accuracies.values())
    return sum(values) / len(values) if values else None


def _normalize_layouts(g: SceneGraph, layouts) -> dict[int, BoxLayout]:
    if isinstance(layouts, dict):
        mapping = dict(layouts)
    else:
        layouts = list(layouts)
        if len(layouts) != g.n_nodes:
            raise ValueError(
                f"layout list has {len(layouts)} entries for {g.n_nodes} nodes"
            )
        mapping = {n.node_id: b for n, b in zip(g.nodes, layouts)}
    missing = [n.node_id for n in g.nodes if n.node_id not in mapping]
    if missing:
        raise ValueError(f"layouts missing for nodes {missing}")
    return mapping


def consistency_report(
    g: SceneGraph,
    layouts,
    thresholds: RuleThresholds | None = None,
    close_mode: str = DEFAULT_CLOSE_MODE,
    symmetry_mode: str = DEFAULT_SYMMETRY_MODE,
) -> ConsistencyReport:
    """Check every ruled edge of a scene against its layouts.

    ``layouts`` is either a node-id map or a list ordered by node id and
    must cover every node.
    """
    mapping = _normalize_layouts(g, layouts)
    report = ConsistencyReport(close_mode=close_mode, symmetry_mode=symmetry_mode)
    for name in RULED_RELATIONS:
        report.per_relation[name] = RelationStats()
    for e in g.edges:
        name = e.predicate.name
        if name not in report.per_relation:
            report.skipped_edges += 1
            continue
        ok = check_edge(
            name, mapping[e.subject], mapping[e.object],
            thresholds, close_mode, symmetry_mode,
        )
        stats = report.per_relation[name]
        stats.checked += 1
        stats.satisfied += int(ok)
        report.checked_edges += 1
        report.satisfied_edges += int(ok)

    for column, members in RULE_COLUMNS.items():
        checked = sum(report.per_relation[m].checked for m in members)
        satisfied = sum(report.per_relation[m].satisfied for m in members)
        if checked:
            report.column_accuracy[column] = satisfied / checked
    easy = {c: report.column_accuracy[c] for c in EASY_COLUMNS if c in report.column_accuracy}
    hard = {c: report.column_accuracy[c] for c in HARD_COLUMNS if c in report.column_accuracy}
    report.easy_mean = macro_mean(easy)
    report.hard_mean = macro_mean(hard)
    report.msg_macro = macro_mean(report.column_accuracy)
    report.msg_micro = (
        report.satisfied_edges / report.checked_edges if report.checked_edges else None
    )
    return report


def edge_verdicts(
    g: SceneGraph,
    layouts,
    thresholds: RuleThresholds | None = None,
    close_mode: str = DEFAULT_CLOSE_MODE,
    symmetry_mode: str = DEFAULT_SYMMETRY_MODE,
) -> list[str]:
    """Per-edge outcome in edge order: satisfied, violated, or skipped."""
    mapping = _normalize_layouts(g, layouts)
    verdicts = []
    for e in g.edges:
        name = e.predicate.name
        if name not in RULED_RELATIONS:
            verdicts.append("skipped")
            continue
        ok = check_edge(
            name, mapping[e.subject], mapping[e.object],
            thresholds, close_mode, symmetry_mode,
        )
        verdicts.append("satisfied" if ok else "violated")
    return verdicts


def violation_count(
    g: SceneGraph,
    layouts,
    thresholds: RuleThresholds | None = None,
    close_mode: str = DEFAULT_CLOSE_MODE,
    symmetry_mode: str = DEFAULT_SYMMETRY_MODE,
) -> int:
    """Number of ruled edges that fail; unruled edges are ignored."""
    mapping = _normalize_layouts(g, layouts)
    bad = 0
    for e in g.edges:
        name = e.predicate.name
        if name not in RULED_RELATIONS:
            continue
        if not check_edge(
            name, mapping[e.subject], mapping[e.object],
            thresholds, close_mode, symmetry_mode,
        ):
            bad += 1
    return bad
