"""Layout refinement and from-scratch constraint solving.

Two desk-scale optimizers over box parameters:

``refine_layouts`` pulls layouts toward known targets by momentum descent on
the reconstruction objective (box L1 plus eta times the IoU term; rotation
bins stay fixed, so the rotation cross-entropy is a constant and is left
out).

``solve_from_graph`` has no targets: it minimizes a penalty objective built
from the graph's geometric rules (hinge losses with a small interior margin
so strict inequalities hold at convergence), pairwise overlap volume, and a
room-bounds term, starting from seeded random placements with category-
default sizes. Yaw bins are re-assigned by discrete search at a fixed
cadence; bottom z stays on the floor.

Both optimizers are deterministic functions of their inputs and config, and
both track the best-visited state, so the reported objective never rises.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import boxes
from .boxes import BoxLayout
from .consistency import (
    RULED_RELATIONS,
    RuleThresholds,
    violation_count,
)
from .graph import SceneGraph, default_category_sizes
from .losses import iou_reg_loss

# Interior margins: rule hinges aim slightly inside the checker's strict
# thresholds so satisfied constraints stay satisfied under float noise.
SEPARATION_SLACK = 0.05
IOU_SLACK = 0.02
RATIO_SLACK = 0.02
DIST_SLACK = 0.02

BOUNDS_WEIGHT = 10.0
SIZE_ANCHOR_WEIGHT = 0.1
CLEARANCE_GAP = 0.01
BOUNDS_TOLERANCE = 1e-3
MIN_EXTENT = 0.05
STALL_WINDOW = 40
BIN_SEARCH_PERIOD = 100


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 2000
    step_size: float = 0.01
    momentum: float = 0.9
    eta: float = 0.01
    overlap_weight: float = 1.0
    rule_weight: float = 1.0
    bounds: tuple[float, float, float] = (6.0, 6.0, 3.0)
    seed: int = 0
    tolerance: float = 1e-6

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.step_size <= 0.0:
            raise ValueError("step_size must be positive")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError("momentum must lie in [0, 1)")
        for name in ("eta", "overlap_weight", "rule_weight"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        if len(self.bounds) != 3 or any(b <= 0.0 for b in self.bounds):
            raise ValueError("bounds must be three positive extents")
        if self.tolerance < 0.0:
            raise ValueError("tolerance must be nonnegative")


@dataclass
class SolveTrace:
    """Per-iteration record plus the run's outcome flags."""

    objective: list[float] = field(default_factory=list)
    collision_volume: list[float] = field(default_factory=list)
    violations: list[int] = field(default_factory=list)
    feasible: bool = True
    message: str = ""

    def append(self, objective: float, collision_volume: float, violations: int) -> None:
        self.objective.append(float(objective))
        self.collision_volume.append(float(collision_volume))
        self.violations.append(int(violations))

    def __len__(self) -> int:
        return len(self.objective)

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "objective", "collision_volume", "violations"])
            for i, (f, c, v) in enumerate(
                zip(self.objective, self.collision_volume, self.violations)
            ):
                writer.writerow([i, repr(f), repr(c), v])


def _descend(
    x0: np.ndarray,
    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    project: Callable[[np.ndarray], np.ndarray],
    record: Callable[[np.ndarray, float], None],
    cfg: SolverConfig,
    budget: int,
) -> tuple[np.ndarray, float]:
    """Momentum descent with best-state tracking and decay-on-stall restarts.

    When the best objective stops improving for a window of iterations the
    state restarts from the best point with halved step and zero velocity;
    plain constant-step heavy-ball limit-cycles on L1-shaped objectives.
    """
    x = project(np.array(x0, dtype=np.float64))
    velocity = np.zeros_like(x)
    step = cfg.step_size
    f, g = value_and_grad(x)
    record(x, f)
    best_f, best_x = f, x.copy()
    stall = 0
    for _ in range(budget):
        if best_f == 0.0:
            break
        velocity = cfg.momentum * velocity - step * g
        x = project(x + velocity)
        f, g = value_and_grad(x)
        record(x, f)
        if f < best_f:
            improvement = best_f - f
            best_f, best_x = f, x.copy()
            stall = 0
            if improvement < cfg.tolerance and step < cfg.step_size:
                break
        else:
            stall += 1
            if stall >= STALL_WINDOW:
                x = best_x.copy()
                velocity[:] = 0.0
                step *= 0.5
                stall = 0
                f, g = value_and_grad(x)
                if step < cfg.step_size * 1e-9:
                    break
    return best_x, best_f


def refine_layouts(
    initial: list[BoxLayout],
    targets: list[BoxLayout],
    cfg: SolverConfig | None = None,
) -> tuple[list[BoxLayout], SolveTrace]:
    """Pull layouts toward targets; yaw bins are kept from ``initial``.

    Minimizes mean box L1 to the targets plus ``cfg.eta`` times the summed
    (1 - IoU) term. The trace's violation column is 0 throughout: refinement
    has no graph in scope.
    """
    cfg = cfg or SolverConfig()
    if len(initial) != len(targets):
        raise ValueError("initial and target layout lists must align")
    if not initial:
        raise ValueError("need at least one layout")
    n = len(initial)
    target_params = boxes.params_matrix(targets)
    angle_bins = boxes.bins_vector(initial)
    trace = SolveTrace()

    def value_and_grad(flat: np.ndarray) -> tuple[float, np.ndarray]:
        p = flat.reshape(n, 6)
        diff = p - target_params
        rec = float(np.sum(np.abs(diff))) / n
        grad = np.sign(diff) / n
        iou_value, iou_grad = iou_reg_loss(p, target_params)
        return rec + cfg.eta * iou_value, (grad + cfg.eta * iou_grad).reshape(-1)

    def project(flat: np.ndarray) -> np.ndarray:
        p = flat.reshape(n, 6)
        p[:, 0:3] = np.maximum(p[:, 0:3], MIN_EXTENT)
        return p.reshape(-1)

    def record(flat: np.ndarray, f: float) -> None:
        p = flat.reshape(n, 6)
        _, volume = boxes.collision_matrix(boxes.layouts_from_arrays(p, angle_bins))
        trace.append(f, volume, 0)

    best_x, _ = _descend(
        boxes.params_matrix(initial).reshape(-1),
        value_and_grad, project, record, cfg, cfg.max_iters,
    )
    return boxes.layouts_from_arrays(best_x.reshape(n, 6), angle_bins), trace


# --- solve_from_graph internals -------------------------------------------

_CENTER_AXIS = {"left of": 3, "right of": 3, "front of": 4, "behind of": 4}
_CENTER_SIGN = {"left of": 1.0, "right of": -1.0, "front of": 1.0, "behind of": -1.0}


def _overlap_and_grad(p: np.ndarray, inflate: float = 0.0) -> tuple[float, np.ndarray]:
    """Pairwise footprint-overlap penalty with center gradients, vectorized.

    Measures per-axis overlap as half-extent sums minus the center offset,
    which upper-bounds the true footprint overlap and, unlike the exact
    volume, keeps a nonzero center gradient when one box sits fully inside
    another (where the exact volume is flat and descent would stall).
    ``inflate`` grows every extent per side so a zero penalty leaves real
    clearance. Heights are ignored: bottoms share the floor plane, so
    separation must happen in the footprint regardless.
    """
    n = p.shape[0]
    grad = np.zeros_like(p)
    if n < 2:
        return 0.0, grad
    iu, ju = np.triu_indices(n, 1)
    dx = p[iu, 3] - p[ju, 3]
    dy = p[iu, 4] - p[ju, 4]
    ox = (p[iu, 0] + p[ju, 0]) / 2.0 + 2.0 * inflate - np.abs(dx)
    oy = (p[iu, 1] + p[ju, 1]) / 2.0 + 2.0 * inflate - np.abs(dy)
    active = (ox > 0.0) & (oy > 0.0)
    if not np.any(active):
        return 0.0, grad
    ox_a, oy_a = ox[active], oy[active]
    total = float(np.sum(ox_a * oy_a))
    sign_x = np.sign(dx[active])
    sign_y = np.sign(dy[active])
    # Centers exactly coincident on an axis give sign 0; break the tie
    # deterministically so stacked twins still separate.
    sign_x[sign_x == 0.0] = 1.0
    sign_y[sign_y == 0.0] = 1.0
    ga = np.zeros((int(np.sum(active)), 6))
    gb = np.zeros_like(ga)
    ga[:, 3] = -sign_x * oy_a
    gb[:, 3] = sign_x * oy_a
    ga[:, 4] = -sign_y * ox_a
    gb[:, 4] = sign_y * ox_a
    np.add.at(grad, iu[active], ga)
    np.add.at(grad, ju[active], gb)
    return total, grad


def _bounds_and_grad(p: np.ndarray, bounds: tuple[float, float, float]) -> tuple[float, np.ndarray]:
    """Quadratic penalty for leaving the room box centered at the origin."""
    half_x, half_y = bounds[0] / 2.0, bounds[1] / 2.0
    height = bounds[2]
    pen = 0.0
    grad = np.zeros_like(p)
    for axis, (half, ext_col, ctr_col) in enumerate(
        ((half_x, 0, 3), (half_y, 1, 4))
    ):
        over = p[:, ctr_col] + p[:, ext_col] / 2.0 - half
        mask = over > 0.0
        pen += float(np.sum(over[mask] ** 2))
        grad[mask, ctr_col] += 2.0 * over[mask]
        grad[mask, ext_col] += over[mask]
        under = -half - (p[:, ctr_col] - p[:, ext_col] / 2.0)
        mask = under > 0.0
        pen += float(np.sum(under[mask] ** 2))
        grad[mask, ctr_col] -= 2.0 * under[mask]
        grad[mask, ext_col] += under[mask]
    over_top = p[:, 5] + p[:, 2] - height
    mask = over_top > 0.0
    pen += float(np.sum(over_top[mask] ** 2))
    grad[mask, 2] += 2.0 * over_top[mask]
    grad[mask, 5] += 2.0 * over_top[mask]
    return pen, grad


def _max_protrusion(p: np.ndarray, bounds: tuple[float, float, float]) -> float:
    """Largest distance any box extends past the room, in meters."""
    worst = 0.0
    for ext_col, ctr_col, half in ((0, 3, bounds[0] / 2.0), (1, 4, bounds[1] / 2.0)):
        worst = max(worst, float(np.max(p[:, ctr_col] + p[:, ext_col] / 2.0 - half)))
        worst = max(worst, float(np.max(-half - (p[:, ctr_col] - p[:, ext_col] / 2.0))))
    worst = max(worst, float(np.max(p[:, 5] + p[:, 2] - bounds[2])))
    return max(worst, 0.0)


def _corner_geometry(p_row: np.ndarray, angle_bin: int, flip_axis: str | None = None):
    """Corners and corner jacobians for a parameter row, optionally mirrored.

    For a mirrored box the jacobian columns are corrected back to the
    original parameters (the mirrored center coordinate enters negated).
    """
    box = BoxLayout.from_params(p_row, angle_bin)
    if flip_axis is None:
        return boxes.corners(box), boxes.corner_jacobians(box)
    flipped = boxes.flip(box, flip_axis)
    cor = boxes.corners(flipped)
    jac = boxes.corner_jacobians(flipped).copy()
    negated_col = 4 if flip_axis == "x" else 3
    jac[:, :, negated_col] *= -1.0
    return cor, jac


def _rules_and_grad(
    p: np.ndarray,
    angle_bins: np.ndarray,
    edges: list[tuple[int, str, int]],
    thresholds: RuleThresholds,
) -> tuple[float, np.ndarray]:
    """Hinge penalties for every ruled edge, with analytic gradients."""
    pen = 0.0
    grad = np.zeros_like(p)
    for i, name, j in edges:
        if name in _CENTER_AXIS:
            col = _CENTER_AXIS[name]
            sign = _CENTER_SIGN[name]
            margin = sign * (p[i, col] - p[j, col]) + SEPARATION_SLACK
            if margin > 0.0:
                pen += margin
                grad[i, col] += sign
                grad[j, col] -= sign
            iou, gi, gj = boxes.iou_and_grads(p[i], p[j])
            if iou > thresholds.iou_max - IOU_SLACK:
                pen += iou - (thresholds.iou_max - IOU_SLACK)
                grad[i] += gi
                grad[j] += gj
        elif name in ("bigger than", "smaller than"):
            vol_i = p[i, 0] * p[i, 1] * p[i, 2]
            vol_j = p[j, 0] * p[j, 1] * p[j, 2]
            ratio = 1.0 - vol_j / vol_i
            d_ratio_i = vol_j / (vol_i * p[i, 0:3])  # d ratio / d (w_i, l_i, h_i)
            d_ratio_j = -vol_j / (vol_i * p[j, 0:3])
            if name == "bigger than":
                margin = thresholds.size_ratio + RATIO_SLACK - ratio
                if margin > 0.0:
                    pen += margin
                    grad[i, 0:3] -= d_ratio_i
                    grad[j, 0:3] -= d_ratio_j
            else:
                margin = ratio + thresholds.size_ratio + RATIO_SLACK
                if margin > 0.0:
                    pen += margin
                    grad[i, 0:3] += d_ratio_i
                    grad[j, 0:3] += d_ratio_j
        elif name in ("taller than", "shorter than"):
            top_i = p[i, 5] + p[i, 2]
            top_j = p[j, 5] + p[j, 2]
            ratio = 1.0 - top_j / top_i
            d_i = top_j / (top_i * top_i)  # d ratio / d top_i
            d_j = -1.0 / top_i
            if name == "taller than":
                margin = thresholds.height_ratio + RATIO_SLACK - ratio
                if margin > 0.0:
                    pen += margin
                    grad[i, 2] -= d_i
                    grad[j, 2] -= d_j
            else:
                margin = ratio + thresholds.height_ratio + RATIO_SLACK
                if margin > 0.0:
                    pen += margin
                    grad[i, 2] += d_i
                    grad[j, 2] += d_j
        elif name == "close by":
            cor_i, jac_i = _corner_geometry(p[i], int(angle_bins[i]))
            cor_j, jac_j = _corner_geometry(p[j], int(angle_bins[j]))
            diff = cor_i[:, None, :] - cor_j[None, :, :]
            dists = np.sqrt(np.sum(diff * diff, axis=-1))
            ki, kj = np.unravel_index(int(np.argmin(dists)), dists.shape)
            dist = dists[ki, kj]
            margin = dist - (thresholds.dist_max - DIST_SLACK)
            if margin > 0.0 and dist > 1e-12:
                pen += margin
                unit = diff[ki, kj] / dist
                grad[i] += unit @ jac_i[ki]
                grad[j] -= unit @ jac_j[kj]
        elif name == "symmetrical to":
            cor_j, jac_j = _corner_geometry(p[j], int(angle_bins[j]))
            best = None
            for axis in ("x", "y"):
                cor_f, jac_f = _corner_geometry(p[i], int(angle_bins[i]), axis)
                deltas = cor_f - cor_j
                norms = np.sqrt(np.sum(deltas * deltas, axis=-1))
                mean = float(np.mean(norms))
                if best is None or mean < best[0]:
                    best = (mean, deltas, norms, jac_f)
            mean, deltas, norms, jac_f = best
            margin = mean - (thresholds.dist_max - DIST_SLACK)
            if margin > 0.0:
                pen += margin
                for k in range(8):
                    if norms[k] <= 1e-12:
                        continue
                    unit = deltas[k] / norms[k]
                    grad[i] += (unit @ jac_f[k]) / 8.0
                    grad[j] -= (unit @ jac_j[k]) / 8.0
    return pen, grad


def _corner_edge_set(edges: list[tuple[int, str, int]]) -> set[int]:
    touched: set[int] = set()
    for i, name, j in edges:
        if name in ("close by", "symmetrical to"):
            touched.add(i)
            touched.add(j)
    return touched


def _distance_objective(
    p: np.ndarray,
    angle_bins: np.ndarray,
    edges: list[tuple[int, str, int]],
    thresholds: RuleThresholds,
) -> float:
    """Only the corner-based hinge terms; used by the discrete bin search."""
    total = 0.0
    for i, name, j in edges:
        if name == "close by":
            box_i = BoxLayout.from_params(p[i], int(angle_bins[i]))
            box_j = BoxLayout.from_params(p[j], int(angle_bins[j]))
            dist = boxes.corner_set_distance(
                boxes.corners(box_i), boxes.corners(box_j), "min_pair"
            )
            total += max(0.0, dist - (thresholds.dist_max - DIST_SLACK))
        elif name == "symmetrical to":
            box_i = BoxLayout.from_params(p[i], int(angle_bins[i]))
            box_j = BoxLayout.from_params(p[j], int(angle_bins[j]))
            cor_j = boxes.corners(box_j)
            dist = min(
                boxes.corner_set_distance(
                    boxes.corners(boxes.flip(box_i, axis)), cor_j, "matched_mean"
                )
                for axis in ("x", "y")
            )
            total += max(0.0, dist - (thresholds.dist_max - DIST_SLACK))
    return total


def solve_from_graph(
    g: SceneGraph,
    cfg: SolverConfig | None = None,
    category_sizes: dict[str, tuple[float, float, float]] | None = None,
    thresholds: RuleThresholds | None = None,
) -> tuple[list[BoxLayout], SolveTrace]:
    """Solve a scene layout from graph constraints alone.

    Returns layouts for every node plus the trace. ``trace.feasible`` is True
    only when every ruled edge checks out and the scene stays inside bounds,
    so feasible scenes always report a perfect rule score.
    """
    cfg = cfg or SolverConfig()
    thresholds = thresholds or RuleThresholds()
    sizes = dict(default_category_sizes())
    if category_sizes:
        sizes.update(category_sizes)

    n = g.n_nodes
    edges = [
        (e.subject, e.predicate.name, e.object)
        for e in g.edges
        if e.predicate.name in RULED_RELATIONS
    ]

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    params = np.zeros((n, 6), dtype=np.float64)
    for node in g.nodes:
        w, l, h = sizes.get(node.category.name, (1.0, 1.0, 1.0))
        params[node.node_id, 0:3] = (w, l, h)
    half_x, half_y = cfg.bounds[0] / 2.0, cfg.bounds[1] / 2.0
    for i in range(n):
        margin_x = min(params[i, 0] / 2.0, half_x * 0.5)
        margin_y = min(params[i, 1] / 2.0, half_y * 0.5)
        params[i, 3] = rng.uniform(-half_x + margin_x, half_x - margin_x)
        params[i, 4] = rng.uniform(-half_y + margin_y, half_y - margin_y)
        params[i, 5] = 0.0
    angle_bins = rng.integers(0, boxes.ROTATION_BINS, size=n)

    trace = SolveTrace()
    footprint = float(np.sum(params[:, 0] * params[:, 1]))
    if footprint > 0.85 * cfg.bounds[0] * cfg.bounds[1]:
        trace.message = (
            f"total footprint {footprint:.2f} m^2 approaches the "
            f"{cfg.bounds[0]:.1f}x{cfg.bounds[1]:.1f} m room; "
            "constraints may be unsatisfiable (best effort returned)"
        )

    corner_nodes = _corner_edge_set(edges)
    iter_counter = 0
    anchor_sizes = params[:, 0:3].copy()

    def make_value_and_grad(overlap_weight: float):
        def value_and_grad(flat: np.ndarray) -> tuple[float, np.ndarray]:
            p = flat.reshape(n, 6)
            rule_pen, rule_grad = _rules_and_grad(p, angle_bins, edges, thresholds)
            overlap_pen, overlap_grad = _overlap_and_grad(p, inflate=CLEARANCE_GAP)
            bounds_pen, bounds_grad = _bounds_and_grad(p, cfg.bounds)
            # Soft pull of sizes toward the category defaults; without it the
            # overlap term prefers collapsing boxes over moving them apart.
            size_diff = p[:, 0:3] - anchor_sizes
            anchor_pen = 0.5 * float(np.sum(size_diff * size_diff))
            value = (
                cfg.rule_weight * rule_pen
                + overlap_weight * overlap_pen
                + BOUNDS_WEIGHT * bounds_pen
                + SIZE_ANCHOR_WEIGHT * anchor_pen
            )
            grad = (
                cfg.rule_weight * rule_grad
                + overlap_weight * overlap_grad
                + BOUNDS_WEIGHT * bounds_grad
            )
            grad[:, 0:3] += SIZE_ANCHOR_WEIGHT * size_diff
            return value, grad.reshape(-1)

        return value_and_grad

    def project(flat: np.ndarray) -> np.ndarray:
        nonlocal iter_counter
        p = flat.reshape(n, 6)
        p[:, 0:3] = np.clip(p[:, 0:3], MIN_EXTENT, max(cfg.bounds))
        p[:, 5] = 0.0  # furniture stays on the floor
        iter_counter += 1
        if corner_nodes and iter_counter % BIN_SEARCH_PERIOD == 0:
            for node in sorted(corner_nodes):
                scores = np.empty(boxes.ROTATION_BINS)
                for candidate in range(boxes.ROTATION_BINS):
                    saved = angle_bins[node]
                    angle_bins[node] = candidate
                    scores[candidate] = _distance_objective(p, angle_bins, edges, thresholds)
                    angle_bins[node] = saved
                angle_bins[node] = int(np.argmin(scores))
        return p.reshape(-1)

    def record(flat: np.ndarray, f: float) -> None:
        p = flat.reshape(n, 6)
        layouts = boxes.layouts_from_arrays(p, angle_bins)
        _, volume = boxes.collision_matrix(layouts)
        trace.append(f, volume, violation_count(g, layouts, thresholds))

    # Penalty rounds: escalate the overlap weight only if collisions remain.
    round_share = (0.5, 0.3, 0.2)
    x = params.reshape(-1)
    best_x = x
    for round_index, share in enumerate(round_share):
        budget = max(1, int(cfg.max_iters * share))
        weight = cfg.overlap_weight * (10.0 ** round_index)
        best_x, best_f = _descend(
            x, make_value_and_grad(weight), project, record, cfg, budget
        )
        x = best_x
        p = best_x.reshape(n, 6)
        layouts = boxes.layouts_from_arrays(p, angle_bins)
        flags, _ = boxes.collision_matrix(layouts)
        clean = not flags.any() and violation_count(g, layouts, thresholds) == 0
        if clean or cfg.overlap_weight == 0.0:
            break

    final_params = best_x.reshape(n, 6)
    layouts = boxes.layouts_from_arrays(final_params, angle_bins)
    violations = violation_count(g, layouts, thresholds)
    protrusion = _max_protrusion(final_params, cfg.bounds)
    trace.feasible = violations == 0 and protrusion <= BOUNDS_TOLERANCE
    if not trace.feasible and not trace.message:
        parts = []
        if violations:
            parts.append(f"{violations} ruled edge(s) unsatisfied")
        if protrusion > BOUNDS_TOLERANCE:
            parts.append(f"boxes leave the room by up to {protrusion:.3f} m")
        trace.message = "; ".join(parts) + f" after {len(trace)} evaluations"
    return layouts, trace


def collision_rate(layout_sets: list[list[BoxLayout]]) -> float:
    """Fraction of scenes containing at least one colliding pair."""
    if not layout_sets:
        raise ValueError("need at least one scene")
    hits = 0
    for layouts in layout_sets:
        flags, _ = boxes.collision_matrix(layouts)
        hits += int(flags.any())
    return hits / len(layout_sets)
