"""Truncated signed-distance grids on the unit cube and exact box SDFs.

Grids sample signed distance at voxel centers of a regular lattice over
[-1, 1]^3 and clamp values to [-tau, tau]. Negative means inside. Clamping
never changes a value's sign, so sign-change tests on the grid agree with
the underlying field wherever the field crosses zero between neighboring
centers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import tensorio

DEFAULT_RESOLUTION = 64


def default_tau(resolution: int = DEFAULT_RESOLUTION) -> float:
    """Three voxel pitches; the conventional truncation band."""
    return 3.0 * (2.0 / resolution)


def box_sdf(points: np.ndarray, half_extents: np.ndarray) -> np.ndarray:
    """Exact signed distance to an origin-centered axis-aligned box.

    For q = |p| - half_extents the distance is the norm of the positive part
    of q plus the (negative inside) largest component of q clamped at zero.
    """
    points = np.asarray(points, dtype=np.float64)
    half_extents = np.asarray(half_extents, dtype=np.float64).reshape(3)
    if np.any(half_extents <= 0.0):
        raise ValueError("half extents must be positive")
    if points.shape[-1] != 3:
        raise ValueError("points must have a trailing dimension of 3")
    q = np.abs(points) - half_extents
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
    inside = np.minimum(np.max(q, axis=-1), 0.0)
    return outside + inside


@dataclass(frozen=True)
class TSDFGrid:
    """Truncated SDF samples at voxel centers over [-1, 1]^3."""

    values: np.ndarray
    tau: float

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3 or len(set(values.shape)) != 1:
            raise ValueError(f"grid must be cubic, got shape {values.shape}")
        if not (self.tau > 0.0):
            raise ValueError("tau must be positive")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite")
        if np.max(np.abs(values)) > self.tau + 1e-12:
            raise ValueError("grid values must lie within [-tau, tau]")
        object.__setattr__(self, "values", values)

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    @property
    def voxel_size(self) -> float:
        return 2.0 / self.resolution

    def save(self, path: str) -> None:
        tensorio.write_tensors(
            path,
            {
                "tsdf/values": self.values,
                "tsdf/meta": np.array([float(self.resolution), self.tau]),
            },
        )

    @classmethod
    def load(cls, path: str) -> "TSDFGrid":
        tensors = tensorio.read_tensors(path)
        try:
            values = tensors["tsdf/values"]
            meta = tensors["tsdf/meta"]
        except KeyError as exc:
            raise tensorio.ContainerFormatError(f"missing tensor {exc}") from exc
        resolution = int(round(float(meta[0])))
        if values.shape != (resolution, resolution, resolution):
            raise tensorio.ContainerFormatError(
                f"grid shape {values.shape} disagrees with recorded resolution {resolution}"
            )
        return cls(values, float(meta[1]))


def voxel_centers(resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    """Center coordinates of every voxel, shape (R, R, R, 3)."""
    axis = -1.0 + (np.arange(resolution) + 0.5) * (2.0 / resolution)
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    return np.stack([gx, gy, gz], axis=-1)


def grid_from_sdf(
    fn: Callable[[np.ndarray], np.ndarray],
    resolution: int = DEFAULT_RESOLUTION,
    tau: float | None = None,
) -> TSDFGrid:
    """Sample a signed-distance function and truncate it.

    ``fn`` maps (..., 3) points to (...) distances. Values are clamped to
    [-tau, tau]; clamping preserves sign by construction.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    tau = default_tau(resolution) if tau is None else float(tau)
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    centers = voxel_centers(resolution).reshape(-1, 3)
    values = np.asarray(fn(centers), dtype=np.float64).reshape(
        resolution, resolution, resolution
    )
    if not np.all(np.isfinite(values)):
        raise ValueError("signed-distance function returned non-finite values")
    return TSDFGrid(np.clip(values, -tau, tau), tau)


def _crossing_points(grid: TSDFGrid) -> np.ndarray:
    """Zero crossings of the grid's linear interpolant along lattice edges.

    Between adjacent voxel centers the trilinear interpolant is linear, so
    the bisection limit along a sign-change edge is the interpolant's exact
    root; it is computed in closed form.
    """
    values = grid.values
    res = grid.resolution
    axis_coords = -1.0 + (np.arange(res) + 0.5) * grid.voxel_size
    points: list[np.ndarray] = []
    for axis in range(3):
        va = np.moveaxis(values, axis, 0)[:-1]
        vb = np.moveaxis(values, axis, 0)[1:]
        mask = (va * vb) < 0.0
        if not np.any(mask):
            continue
        idx = np.argwhere(mask)  # first column indexes the moved axis
        v0 = va[mask]
        v1 = vb[mask]
        t = v0 / (v0 - v1)
        order = [axis] + [a for a in range(3) if a != axis]
        coords = np.empty((idx.shape[0], 3), dtype=np.float64)
        for col, world_axis in enumerate(order):
            coords[:, world_axis] = axis_coords[idx[:, col]]
        coords[:, axis] += t * grid.voxel_size
        points.append(coords)
    if not points:
        return np.zeros((0, 3), dtype=np.float64)
    return np.concatenate(points, axis=0)


def surface_points(grid: TSDFGrid, k: int, seed: int = 0) -> np.ndarray:
    """Sample k points on the grid's zero level set, shape (k, 3).

    Candidate points are the interpolated zero crossings along all lattice
    edges with a sign change; k of them are drawn uniformly (with
    replacement) by the seeded generator.

    Raises ValueError when the grid has no sign change anywhere.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    candidates = _crossing_points(grid)
    if candidates.shape[0] == 0:
        raise ValueError("grid has no zero crossing; no surface to sample")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    picks = rng.integers(0, candidates.shape[0], size=k)
    return candidates[picks]
