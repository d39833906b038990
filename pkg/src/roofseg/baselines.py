"""Classical plane-segmentation baselines: sequential RANSAC and region growing."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .cluster import Segmentation
from .errors import DegenerateInput
from .geom import SpatialIndex, estimate_normals, fit_plane


@dataclass(frozen=True)
class RansacParams:
    """Defaults suit unit-radius normalized clouds at the default noise level."""

    dist_thresh: float = 0.03
    min_points: int = 100
    iterations: int = 500
    seed: int = 0

    def __post_init__(self):
        if not self.dist_thresh > 0:
            raise ValueError("dist_thresh must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.min_points < 1:
            raise ValueError("min_points must be >= 1")


@dataclass(frozen=True)
class RegionGrowParams:
    angle_thresh: float = 25.0
    dist_thresh: float = 0.05
    k: int = 30
    min_points: int = 100

    def __post_init__(self):
        if not 0 < self.angle_thresh < 90:
            raise ValueError("angle_thresh must lie in (0, 90) degrees")
        if not self.dist_thresh > 0:
            raise ValueError("dist_thresh must be > 0")
        if self.k < 3:
            raise ValueError("k must be >= 3")
        if self.min_points < 1:
            raise ValueError("min_points must be >= 1")


def _points(cloud) -> np.ndarray:
    return np.asarray(getattr(cloud, "points", cloud), dtype=float).reshape(-1, 3)


def _hypotheses(pts, triples):
    """Unit normals and offsets of the planes through each sampled triple.

    Rows with collinear samples get a zero normal and never collect inliers.
    """
    a, b, c = pts[triples[:, 0]], pts[triples[:, 1]], pts[triples[:, 2]]
    n = np.cross(b - a, c - a)
    norm = np.linalg.norm(n, axis=1)
    ok = norm > 1e-12 * np.maximum(1.0, np.abs(pts).max())
    n[ok] /= norm[ok, None]
    n[~ok] = 0.0
    d = -(n * a).sum(axis=1)
    return n, d, ok


def ransac_inlier_counts(pts, normals, offsets, valid, dist_thresh) -> np.ndarray:
    dist = np.abs(pts @ normals.T + offsets)
    counts = (dist <= dist_thresh).sum(axis=0)
    return np.where(valid, counts, -1)


def ransac_segment(cloud, params: RansacParams = RansacParams()) -> Segmentation:
    """Sequential RANSAC: extract the best-supported plane, remove it, repeat.

    Each round draws ``iterations`` random triples, counts inliers within
    ``dist_thresh`` by a full scan and keeps the first hypothesis with the most
    support.  Extraction stops once the best plane has fewer than
    ``min_points`` inliers.
    """
    pts = _points(cloud)
    rng = np.random.default_rng(params.seed)
    remaining = np.arange(len(pts))
    clusters = []
    while len(remaining) >= max(3, params.min_points):
        sub = pts[remaining]
        triples = np.stack([rng.choice(len(sub), 3, replace=False) for _ in range(params.iterations)])
        normals, offsets, valid = _hypotheses(sub, triples)
        counts = ransac_inlier_counts(sub, normals, offsets, valid, params.dist_thresh)
        best = int(np.argmax(counts))
        if counts[best] < params.min_points:
            break
        inl = np.abs(sub @ normals[best] + offsets[best]) <= params.dist_thresh
        clusters.append(np.sort(remaining[inl]))
        remaining = remaining[~inl]
    return Segmentation(clusters, np.sort(remaining))


_REFIT_EVERY = 32


def local_rms(pts, neighborhoods) -> np.ndarray:
    """RMS plane-fit residual over each neighborhood (batched PCA)."""
    local = pts[neighborhoods]
    centered = local - local.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / neighborhoods.shape[1]
    w = np.linalg.eigvalsh(cov)
    return np.sqrt(np.maximum(w[:, 0], 0.0))


def region_grow_segment(cloud, params: RegionGrowParams = RegionGrowParams()) -> Segmentation:
    """Seeded region growing over the kNN graph.

    Seeds are tried flattest first (ascending local RMS residual).  A region
    starts from the plane fitted to its seed's neighborhood and accepts a
    neighbor when its normal is within ``angle_thresh`` of the region plane and
    it lies within ``dist_thresh`` of it.  The plane is refitted every 32
    accepted points.  Regions smaller than ``min_points`` are dissolved; their
    points may still join a later region but never seed one.
    """
    pts = _points(cloud)
    n = len(pts)
    if n < max(3, params.min_points):
        return Segmentation([], np.arange(n))
    k = min(params.k, n)
    index = SpatialIndex(pts)
    nbrs = np.stack(index.knn_all(k))
    normals = estimate_normals(pts, k, index)
    rms = local_rms(pts, nbrs)
    cos_lim = math.cos(math.radians(params.angle_thresh))

    usable = normals.any(axis=1)
    label = np.full(n, -1, dtype=np.int64)
    tried = np.zeros(n, dtype=bool)
    clusters = []
    for seed in np.lexsort((np.arange(n), rms)):
        if label[seed] >= 0 or tried[seed] or not usable[seed]:
            continue
        tried[seed] = True
        try:
            plane = fit_plane(pts[nbrs[seed]])
        except DegenerateInput:
            continue
        cid = len(clusters)
        label[seed] = cid
        members = [seed]
        queue = deque([seed])
        since_fit = 0
        while queue:
            cur = queue.popleft()
            cand = nbrs[cur]
            cand = cand[(label[cand] < 0) & usable[cand]]
            while len(cand):
                ok = (np.abs(normals[cand] @ plane.normal) >= cos_lim) & (
                    np.abs(pts[cand] @ plane.normal + plane.offset) < params.dist_thresh
                )
                take = cand[ok][: _REFIT_EVERY - since_fit]
                label[take] = cid
                members.extend(take.tolist())
                queue.extend(take.tolist())
                since_fit += len(take)
                if since_fit < _REFIT_EVERY:
                    break
                # refit, then re-test whatever this neighborhood has left
                since_fit = 0
                try:
                    plane = fit_plane(pts[members])
                except DegenerateInput:
                    pass
                cand = cand[label[cand] < 0]
        if len(members) < params.min_points:
            label[members] = -1
        else:
            clusters.append(np.sort(np.asarray(members, dtype=np.intp)))
    return Segmentation(clusters, np.flatnonzero(label < 0))
