"""7-DoF box layouts and the geometry shared by rules, losses, and the solver.

World frame: x runs left/right, y runs front/behind, z points up. A layout is
an oriented box given by its extents ``(w, l, h)``, its bottom-center
``(cx, cy, cz)``, and a yaw class out of ``ROTATION_BINS`` bins of 15 degrees.
Extents are strictly positive; ``cz`` is the height of the *bottom* face.

Rotation only affects corner-based quantities (corner sets, corner distances,
surface sampling). Overlap tests (IoU, intersection volume, collisions) are
axis-aligned on the six box parameters and deliberately ignore the yaw bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ROTATION_BINS = 24
BIN_WIDTH_DEG = 360.0 / ROTATION_BINS

# Intersection volume below this threshold does not count as a collision;
# touching faces produce exact zeros but solver output may carry float dust.
COLLISION_VOLUME_EPS = 1e-4

PARAM_NAMES = ("w", "l", "h", "cx", "cy", "cz")


@dataclass(frozen=True)
class BoxLayout:
    """Oriented box: extents, bottom-center, yaw bin.

    ``angle_bin`` indexes one of 24 yaw classes; bin b means a rotation of
    15*b degrees counterclockwise about the vertical axis through the center.
    """

    w: float
    l: float
    h: float
    cx: float
    cy: float
    cz: float
    angle_bin: int = 0

    def __post_init__(self) -> None:
        for name in ("w", "l", "h"):
            value = getattr(self, name)
            if not (value > 0.0) or not math.isfinite(value):
                raise ValueError(f"box extent {name} must be positive and finite, got {value!r}")
        for name in ("cx", "cy", "cz"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"box center {name} must be finite")
        if not (0 <= int(self.angle_bin) < ROTATION_BINS):
            raise ValueError(f"angle_bin must lie in [0, {ROTATION_BINS}), got {self.angle_bin!r}")

    @property
    def angle_deg(self) -> float:
        return unbin_angle(self.angle_bin)

    @property
    def volume(self) -> float:
        return self.w * self.l * self.h

    @property
    def top(self) -> float:
        return self.cz + self.h

    def params(self) -> np.ndarray:
        """The six box parameters as [w, l, h, cx, cy, cz], float64."""
        return np.array([self.w, self.l, self.h, self.cx, self.cy, self.cz], dtype=np.float64)

    @classmethod
    def from_params(cls, params: np.ndarray, angle_bin: int = 0) -> "BoxLayout":
        p = np.asarray(params, dtype=np.float64).reshape(6)
        return cls(p[0], p[1], p[2], p[3], p[4], p[5], int(angle_bin))

    def to_json_dict(self, node_id: int) -> dict:
        return {
            "node": int(node_id),
            "box": [self.w, self.l, self.h, self.cx, self.cy, self.cz],
            "angle_bin": int(self.angle_bin),
            "angle_deg": self.angle_deg,
        }


def bin_angle(alpha_deg: float, bins: int = ROTATION_BINS) -> int:
    """Map a yaw angle in degrees to its nearest rotation class.

    Bin centers sit at multiples of the bin width; boundaries round up, so
    7.5 degrees lands in bin 1 and 352.5 wraps to bin 0 with 24 bins.
    """
    width = 360.0 / bins
    return int(math.floor((alpha_deg % 360.0 + width / 2.0) / width)) % bins


def unbin_angle(angle_bin: int, bins: int = ROTATION_BINS) -> float:
    """Center angle (degrees) of a rotation class."""
    if not (0 <= int(angle_bin) < bins):
        raise ValueError(f"angle_bin must lie in [0, {bins}), got {angle_bin!r}")
    return (360.0 / bins) * int(angle_bin)


# Canonical local corner ordering: the four bottom corners counterclockwise
# starting at (-w/2, -l/2), then the four top corners in the same x/y order.
_CORNER_SIGNS = np.array(
    [
        [-1.0, -1.0, 0.0],
        [+1.0, -1.0, 0.0],
        [+1.0, +1.0, 0.0],
        [-1.0, +1.0, 0.0],
        [-1.0, -1.0, 1.0],
        [+1.0, -1.0, 1.0],
        [+1.0, +1.0, 1.0],
        [-1.0, +1.0, 1.0],
    ]
)

# Index remap induced by mirroring: reflection about either world axis flips
# the sign of one local corner axis, exchanging canonical slots.
MIRROR_CORNER_PERMUTATION = np.array([3, 2, 1, 0, 7, 6, 5, 4])


def corners(box: BoxLayout) -> np.ndarray:
    """The 8 world-frame vertices of a box, canonically ordered, shape (8, 3)."""
    alpha = math.radians(box.angle_deg)
    cos_a, sin_a = math.cos(alpha), math.sin(alpha)
    local_x = _CORNER_SIGNS[:, 0] * (box.w / 2.0)
    local_y = _CORNER_SIGNS[:, 1] * (box.l / 2.0)
    out = np.empty((8, 3), dtype=np.float64)
    out[:, 0] = box.cx + cos_a * local_x - sin_a * local_y
    out[:, 1] = box.cy + sin_a * local_x + cos_a * local_y
    out[:, 2] = box.cz + _CORNER_SIGNS[:, 2] * box.h
    return out


def corner_jacobians(box: BoxLayout) -> np.ndarray:
    """d(corner)/d(param) for all 8 corners, shape (8, 3, 6).

    Parameter order matches ``BoxLayout.params()``. The yaw bin is treated as
    fixed (it is a discrete class, not a continuous parameter).
    """
    alpha = math.radians(box.angle_deg)
    cos_a, sin_a = math.cos(alpha), math.sin(alpha)
    jac = np.zeros((8, 3, 6), dtype=np.float64)
    sx = _CORNER_SIGNS[:, 0] / 2.0
    sy = _CORNER_SIGNS[:, 1] / 2.0
    jac[:, 0, 0] = cos_a * sx
    jac[:, 1, 0] = sin_a * sx
    jac[:, 0, 1] = -sin_a * sy
    jac[:, 1, 1] = cos_a * sy
    jac[:, 2, 2] = _CORNER_SIGNS[:, 2]
    jac[:, 0, 3] = 1.0
    jac[:, 1, 4] = 1.0
    jac[:, 2, 5] = 1.0
    return jac


def aabb_bounds(box: BoxLayout) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounds (lo, hi) of the box's six parameters, yaw ignored."""
    lo = np.array([box.cx - box.w / 2.0, box.cy - box.l / 2.0, box.cz])
    hi = np.array([box.cx + box.w / 2.0, box.cy + box.l / 2.0, box.cz + box.h])
    return lo, hi


def _axis_overlaps_params(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-axis interval overlaps for parameter rows shaped (..., 6).

    Returns overlaps shaped (..., 3); entries are clamped at zero.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a_lo = np.stack(
        [a[..., 3] - a[..., 0] / 2.0, a[..., 4] - a[..., 1] / 2.0, a[..., 5]], axis=-1
    )
    a_hi = np.stack(
        [a[..., 3] + a[..., 0] / 2.0, a[..., 4] + a[..., 1] / 2.0, a[..., 5] + a[..., 2]], axis=-1
    )
    b_lo = np.stack(
        [b[..., 3] - b[..., 0] / 2.0, b[..., 4] - b[..., 1] / 2.0, b[..., 5]], axis=-1
    )
    b_hi = np.stack(
        [b[..., 3] + b[..., 0] / 2.0, b[..., 4] + b[..., 1] / 2.0, b[..., 5] + b[..., 2]], axis=-1
    )
    return np.maximum(0.0, np.minimum(a_hi, b_hi) - np.maximum(a_lo, b_lo))


def intersection_volume_params(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Axis-aligned intersection volume for parameter rows shaped (..., 6)."""
    return np.prod(_axis_overlaps_params(a, b), axis=-1)


def iou_params(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Axis-aligned IoU for parameter rows shaped (..., 6), yaw ignored."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    inter = intersection_volume_params(a, b)
    vol_a = np.prod(a[..., 0:3], axis=-1)
    vol_b = np.prod(b[..., 0:3], axis=-1)
    union = vol_a + vol_b - inter
    iou = np.where(union > 0.0, inter / np.where(union > 0.0, union, 1.0), 0.0)
    # Interval endpoints are rounded separately from extent products, so a
    # box matched with itself can land an ulp off 1 in either direction; the
    # ratio can never legitimately exceed 1, and bitwise-equal rows are the
    # same box, whose IoU is 1 by definition.
    iou = np.minimum(iou, 1.0)
    return np.where(np.all(a == b, axis=-1), 1.0, iou)


def iou_and_grads(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """IoU of two parameter rows plus its gradient w.r.t. each row.

    The IoU is piecewise smooth in the twelve parameters. At breakpoints
    (interval endpoints tying, overlap vanishing) the one-sided choice below
    reports 0 for the tied side, so the returned gradient is always a valid
    subgradient and exactly 0 wherever the boxes do not overlap.
    """
    a = np.asarray(a, dtype=np.float64).reshape(6)
    b = np.asarray(b, dtype=np.float64).reshape(6)
    ga = np.zeros(6)
    gb = np.zeros(6)
    if np.array_equal(a, b):
        # The same box: IoU is exactly 1, where zero is a valid subgradient.
        # Checked up front because the interval endpoints below round
        # separately from the volume products and can land an ulp under 1.
        return 1.0, ga, gb

    a_lo = np.array([a[3] - a[0] / 2.0, a[4] - a[1] / 2.0, a[5]])
    a_hi = np.array([a[3] + a[0] / 2.0, a[4] + a[1] / 2.0, a[5] + a[2]])
    b_lo = np.array([b[3] - b[0] / 2.0, b[4] - b[1] / 2.0, b[5]])
    b_hi = np.array([b[3] + b[0] / 2.0, b[4] + b[1] / 2.0, b[5] + b[2]])
    overlap = np.minimum(a_hi, b_hi) - np.maximum(a_lo, b_lo)
    if np.any(overlap <= 0.0):
        return 0.0, ga, gb

    inter = float(np.prod(overlap))
    vol_a = float(np.prod(a[0:3]))
    vol_b = float(np.prod(b[0:3]))
    union = vol_a + vol_b - inter
    iou = inter / union
    if iou >= 1.0:
        # Identical boxes up to rounding: IoU saturates at its maximum, where
        # the zero vector is the valid subgradient.
        return 1.0, ga, gb

    # d(overlap_k)/d(param): strict comparisons zero out tied breakpoints.
    a_hi_active = (a_hi < b_hi).astype(np.float64)
    a_lo_active = (a_lo > b_lo).astype(np.float64)
    b_hi_active = (b_hi < a_hi).astype(np.float64)
    b_lo_active = (b_lo > a_lo).astype(np.float64)

    # rows: overlap axis; columns: (extent, center) derivative for that axis.
    # x overlap: d/dw = (hi_active + lo_active)/2, d/dcx = hi_active - lo_active;
    # z overlap: d/dh = hi_active, d/dcz = hi_active - lo_active.
    d_over_a = np.zeros((3, 2))
    d_over_b = np.zeros((3, 2))
    for k in range(2):
        d_over_a[k, 0] = (a_hi_active[k] + a_lo_active[k]) / 2.0
        d_over_a[k, 1] = a_hi_active[k] - a_lo_active[k]
        d_over_b[k, 0] = (b_hi_active[k] + b_lo_active[k]) / 2.0
        d_over_b[k, 1] = b_hi_active[k] - b_lo_active[k]
    d_over_a[2, 0] = a_hi_active[2]
    d_over_a[2, 1] = a_hi_active[2] - a_lo_active[2]
    d_over_b[2, 0] = b_hi_active[2]
    d_over_b[2, 1] = b_hi_active[2] - b_lo_active[2]

    other = np.array(
        [overlap[1] * overlap[2], overlap[0] * overlap[2], overlap[0] * overlap[1]]
    )
    d_inter_a = np.zeros(6)
    d_inter_b = np.zeros(6)
    for k in range(3):
        d_inter_a[k] = d_over_a[k, 0] * other[k]
        d_inter_a[3 + k] = d_over_a[k, 1] * other[k]
        d_inter_b[k] = d_over_b[k, 0] * other[k]
        d_inter_b[3 + k] = d_over_b[k, 1] * other[k]

    d_vol_a = np.zeros(6)
    d_vol_a[0] = a[1] * a[2]
    d_vol_a[1] = a[0] * a[2]
    d_vol_a[2] = a[0] * a[1]
    d_vol_b = np.zeros(6)
    d_vol_b[0] = b[1] * b[2]
    d_vol_b[1] = b[0] * b[2]
    d_vol_b[2] = b[0] * b[1]

    d_union_a = d_vol_a - d_inter_a
    d_union_b = d_vol_b - d_inter_b
    ga = (d_inter_a * union - inter * d_union_a) / (union * union)
    gb = (d_inter_b * union - inter * d_union_b) / (union * union)
    return float(iou), ga, gb


def intersection_grads(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Intersection volume of two parameter rows plus its subgradients."""
    a = np.asarray(a, dtype=np.float64).reshape(6)
    b = np.asarray(b, dtype=np.float64).reshape(6)
    ga = np.zeros(6)
    gb = np.zeros(6)
    a_lo = np.array([a[3] - a[0] / 2.0, a[4] - a[1] / 2.0, a[5]])
    a_hi = np.array([a[3] + a[0] / 2.0, a[4] + a[1] / 2.0, a[5] + a[2]])
    b_lo = np.array([b[3] - b[0] / 2.0, b[4] - b[1] / 2.0, b[5]])
    b_hi = np.array([b[3] + b[0] / 2.0, b[4] + b[1] / 2.0, b[5] + b[2]])
    overlap = np.minimum(a_hi, b_hi) - np.maximum(a_lo, b_lo)
    if np.any(overlap <= 0.0):
        return 0.0, ga, gb
    inter = float(np.prod(overlap))
    a_hi_active = (a_hi < b_hi).astype(np.float64)
    a_lo_active = (a_lo > b_lo).astype(np.float64)
    b_hi_active = (b_hi < a_hi).astype(np.float64)
    b_lo_active = (b_lo > a_lo).astype(np.float64)
    other = np.array(
        [overlap[1] * overlap[2], overlap[0] * overlap[2], overlap[0] * overlap[1]]
    )
    for k in range(2):
        ga[k] = (a_hi_active[k] + a_lo_active[k]) / 2.0 * other[k]
        ga[3 + k] = (a_hi_active[k] - a_lo_active[k]) * other[k]
        gb[k] = (b_hi_active[k] + b_lo_active[k]) / 2.0 * other[k]
        gb[3 + k] = (b_hi_active[k] - b_lo_active[k]) * other[k]
    ga[2] = a_hi_active[2] * other[2]
    ga[5] = (a_hi_active[2] - a_lo_active[2]) * other[2]
    gb[2] = b_hi_active[2] * other[2]
    gb[5] = (b_hi_active[2] - b_lo_active[2]) * other[2]
    return inter, ga, gb


def aabb_iou(box_a: BoxLayout, box_b: BoxLayout) -> float:
    """Axis-aligned IoU of two layouts; the yaw bins are ignored."""
    return float(iou_params(box_a.params(), box_b.params()))


def intersection_volume(box_a: BoxLayout, box_b: BoxLayout) -> float:
    """Axis-aligned overlap volume of two layouts; zero when separated."""
    return float(intersection_volume_params(box_a.params(), box_b.params()))


def flip(box: BoxLayout, axis: str) -> BoxLayout:
    """Mirror a layout across a world axis through the origin.

    Flipping about the x axis negates cy and maps bin b to (24 - b) mod 24;
    flipping about the y axis negates cx and maps bin b to (12 - b) mod 24.
    Applying the same flip twice returns the original layout.
    """
    if axis == "x":
        return BoxLayout(
            box.w, box.l, box.h, box.cx, -box.cy, box.cz,
            (ROTATION_BINS - box.angle_bin) % ROTATION_BINS,
        )
    if axis == "y":
        return BoxLayout(
            box.w, box.l, box.h, -box.cx, box.cy, box.cz,
            (ROTATION_BINS // 2 - box.angle_bin) % ROTATION_BINS,
        )
    raise ValueError(f"flip axis must be 'x' or 'y', got {axis!r}")


def corner_set_distance(
    corners_a: np.ndarray, corners_b: np.ndarray, mode: str = "min_pair"
) -> float:
    """Distance between two 8-corner sets.

    ``min_pair`` takes the minimum Euclidean distance over all 64 corner
    pairs; ``matched_mean`` averages distances between corners matched by
    their canonical index. Inputs must both have shape (8, 3).
    """
    a = np.asarray(corners_a, dtype=np.float64)
    b = np.asarray(corners_b, dtype=np.float64)
    if a.shape != (8, 3) or b.shape != (8, 3):
        raise ValueError("corner sets must have shape (8, 3)")
    if mode == "min_pair":
        diff = a[:, None, :] - b[None, :, :]
        return float(np.sqrt(np.sum(diff * diff, axis=-1)).min())
    if mode == "matched_mean":
        return float(np.sqrt(np.sum((a - b) ** 2, axis=-1)).mean())
    raise ValueError(f"unknown corner distance mode {mode!r}")


def collision_matrix(
    layouts: list[BoxLayout], eps: float = COLLISION_VOLUME_EPS
) -> tuple[np.ndarray, float]:
    """Pairwise collision flags and the total colliding volume of a scene.

    Returns an N x N boolean matrix (symmetric, False diagonal) where entry
    (i, j) marks intersection volume above ``eps``, together with the sum of
    intersection volumes over unordered pairs.
    """
    n = len(layouts)
    flags = np.zeros((n, n), dtype=bool)
    total = 0.0
    params = [b.params() for b in layouts]
    for i in range(n):
        for j in range(i + 1, n):
            vol = float(intersection_volume_params(params[i], params[j]))
            total += vol
            if vol > eps:
                flags[i, j] = flags[j, i] = True
    return flags, total


def params_matrix(layouts: list[BoxLayout]) -> np.ndarray:
    """Stack layouts into an (N, 6) parameter matrix."""
    if not layouts:
        return np.zeros((0, 6), dtype=np.float64)
    return np.stack([b.params() for b in layouts])


def bins_vector(layouts: list[BoxLayout]) -> np.ndarray:
    """Yaw bins of a layout list as an (N,) int array."""
    return np.array([b.angle_bin for b in layouts], dtype=np.int64)


def layouts_from_arrays(params: np.ndarray, angle_bins: np.ndarray) -> list[BoxLayout]:
    """Rebuild layout objects from an (N, 6) parameter matrix and bins."""
    params = np.asarray(params, dtype=np.float64)
    angle_bins = np.asarray(angle_bins, dtype=np.int64)
    if params.shape[0] != angle_bins.shape[0]:
        raise ValueError("parameter rows and bin entries must align")
    return [BoxLayout.from_params(params[i], int(angle_bins[i])) for i in range(params.shape[0])]
