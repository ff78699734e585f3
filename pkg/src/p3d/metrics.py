"""Point-cloud fidelity metrics: Chamfer distance, MMD, COV, 1-NNA.

A point cloud is a (K, 3) float array; a collection is a list of clouds
(sizes may differ). Chamfer distance here is the summed-squared form: for
clouds P and Q it adds the squared distance from every point to its nearest
neighbor in the other cloud, both directions, no normalization.

Nearest-neighbor lookups run through a KD-tree; the test suite pins the
result to an independent brute-force oracle. Collection metrics canonicalize
input order (lexicographic sort of the clouds) before index-based
tie-breaking, so their values are invariant to input permutation.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from .boxes import BoxLayout


def _check_cloud(p: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] < 1:
        raise ValueError(f"{name} must be a nonempty (K, 3) array, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return p


def chamfer(p: np.ndarray, q: np.ndarray) -> float:
    """Summed squared nearest-neighbor distance, both directions."""
    p = _check_cloud(p, "p")
    q = _check_cloud(q, "q")
    d_pq = cKDTree(q).query(p, k=1)[0]
    d_qp = cKDTree(p).query(q, k=1)[0]
    return float(np.sum(d_pq * d_pq) + np.sum(d_qp * d_qp))


def pairwise_chamfer(collection_a: list[np.ndarray], collection_b: list[np.ndarray]) -> np.ndarray:
    """Chamfer distances between every cloud pair, shape (|A|, |B|)."""
    out = np.empty((len(collection_a), len(collection_b)), dtype=np.float64)
    trees_b = [cKDTree(_check_cloud(q, "cloud")) for q in collection_b]
    trees_a = [cKDTree(_check_cloud(p, "cloud")) for p in collection_a]
    for i, p in enumerate(collection_a):
        p = np.asarray(p, dtype=np.float64)
        for j, q in enumerate(collection_b):
            q = np.asarray(q, dtype=np.float64)
            d_pq = trees_b[j].query(p, k=1)[0]
            d_qp = trees_a[i].query(q, k=1)[0]
            out[i, j] = np.sum(d_pq * d_pq) + np.sum(d_qp * d_qp)
    return out


def _canonical(collection: list[np.ndarray]) -> list[np.ndarray]:
    """Sort clouds by a content key so indices are input-order independent.

    The key sorts each cloud's points lexicographically first, making it
    insensitive to point order inside a cloud; cloud data is not modified.
    """
    def key(cloud: np.ndarray) -> bytes:
        arr = np.asarray(cloud, dtype=np.float64)
        order = np.lexsort((arr[:, 2], arr[:, 1], arr[:, 0]))
        return arr[order].tobytes() + arr.shape[0].to_bytes(8, "little")

    return sorted((np.asarray(c, dtype=np.float64) for c in collection), key=key)


def mmd(reference: list[np.ndarray], generated: list[np.ndarray]) -> float:
    """Minimum matching distance: for each generated cloud, the Chamfer
    distance to its closest reference cloud, averaged over generated clouds."""
    if not reference or not generated:
        raise ValueError("both collections must be nonempty")
    distances = pairwise_chamfer(reference, generated)
    return float(np.mean(np.min(distances, axis=0)))


def cov(reference: list[np.ndarray], generated: list[np.ndarray]) -> float:
    """Coverage: fraction of generated clouds that are the nearest match of
    at least one reference cloud. Ties break to the lowest index after
    canonicalization."""
    if not reference or not generated:
        raise ValueError("both collections must be nonempty")
    reference = _canonical(reference)
    generated = _canonical(generated)
    distances = pairwise_chamfer(reference, generated)
    matched = {int(np.argmin(distances[i])) for i in range(len(reference))}
    return len(matched) / len(generated)


def one_nna(reference: list[np.ndarray], generated: list[np.ndarray]) -> float:
    """Leave-one-out 1-nearest-neighbor accuracy between the collections.

    Every cloud in the union looks up its nearest neighbor (by Chamfer
    distance) among all other clouds; the score is the fraction whose
    neighbor shares its collection label. Indistinguishable collections
    score near 0.5. Ties break to the lowest index after canonicalization.
    """
    if len(reference) + len(generated) < 2:
        raise ValueError("need at least two clouds across both collections")
    if not reference or not generated:
        raise ValueError("both collections must be nonempty")
    reference = _canonical(reference)
    generated = _canonical(generated)
    union = reference + generated
    labels = np.array([0] * len(reference) + [1] * len(generated))
    distances = pairwise_chamfer(union, union)
    np.fill_diagonal(distances, np.inf)
    neighbors = np.argmin(distances, axis=1)
    return float(np.mean(labels[neighbors] == labels))


def sample_box_surface(box: BoxLayout, k: int, seed: int = 0) -> np.ndarray:
    """Sample k points uniformly by area over an oriented box's six faces.

    Faces are chosen per point with probability proportional to area, then a
    uniform position is drawn on the face and carried to the world frame.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    w, l, h = box.w, box.l, box.h
    areas = np.array([w * l, w * l, w * h, w * h, l * h, l * h])
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    faces = rng.choice(6, size=k, p=areas / areas.sum())
    u = rng.uniform(-0.5, 0.5, size=k)
    v = rng.uniform(-0.5, 0.5, size=k)

    # Local frame: origin at the box center, extents [-w/2, w/2] etc.
    local = np.empty((k, 3), dtype=np.float64)
    is_top = faces == 0
    is_bottom = faces == 1
    is_front = faces == 2  # y = -l/2
    is_back = faces == 3
    is_left = faces == 4  # x = -w/2
    is_right = faces == 5
    horizontal = is_top | is_bottom
    local[horizontal, 0] = u[horizontal] * w
    local[horizontal, 1] = v[horizontal] * l
    local[is_top, 2] = h / 2.0
    local[is_bottom, 2] = -h / 2.0
    xz = is_front | is_back
    local[xz, 0] = u[xz] * w
    local[xz, 2] = v[xz] * h
    local[is_front, 1] = -l / 2.0
    local[is_back, 1] = l / 2.0
    yz = is_left | is_right
    local[yz, 1] = u[yz] * l
    local[yz, 2] = v[yz] * h
    local[is_left, 0] = -w / 2.0
    local[is_right, 0] = w / 2.0

    alpha = math.radians(box.angle_deg)
    cos_a, sin_a = math.cos(alpha), math.sin(alpha)
    out = np.empty_like(local)
    out[:, 0] = box.cx + cos_a * local[:, 0] - sin_a * local[:, 1]
    out[:, 1] = box.cy + sin_a * local[:, 0] + cos_a * local[:, 1]
    out[:, 2] = box.cz + h / 2.0 + local[:, 2]
    return out


def read_point_cloud(path: str) -> np.ndarray:
    """Load a cloud from a whitespace-separated .xyz text file or a tensor
    container holding a tensor named ``points``."""
    if path.endswith(".p3dw"):
        from . import tensorio

        tensors = tensorio.read_tensors(path)
        if "points" not in tensors:
            raise ValueError(f"{path} has no 'points' tensor")
        return _check_cloud(tensors["points"], path)
    return _check_cloud(np.loadtxt(path, dtype=np.float64).reshape(-1, 3), path)
