"""Joint Euclidean / embedding-space flood-fill clustering of plane points."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import LengthMismatch


@dataclass(frozen=True)
class ClusterParams:
    r: float = 0.5
    w1: float = 0.1
    w2: float = 0.9
    min_cluster_size: int = 100

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("r must be > 0")
        if self.w1 < 0 or self.w2 < 0 or self.w1 + self.w2 <= 0:
            raise ValueError("w1, w2 must be non-negative with positive sum")
        if self.min_cluster_size < 1:
            raise ValueError("min_cluster_size must be >= 1")


@dataclass
class Segmentation:
    """Disjoint clusters of point indices plus the indices left unassigned."""

    clusters: list[np.ndarray] = field(default_factory=list)
    unassigned: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.intp))

    def __post_init__(self):
        self.clusters = [np.asarray(c, dtype=np.intp) for c in self.clusters]
        self.unassigned = np.asarray(self.unassigned, dtype=np.intp)

    def __len__(self) -> int:
        return len(self.clusters)

    def labels(self, n: int) -> np.ndarray:
        """Per-point cluster id, -1 where unassigned or not covered."""
        out = np.full(n, -1, dtype=np.int64)
        for cid, members in enumerate(self.clusters):
            out[members] = cid
        return out

    @classmethod
    def from_labels(cls, labels) -> "Segmentation":
        """Inverse of :meth:`labels`: ids are renumbered by first occurrence."""
        labels = np.asarray(labels)
        ids = [i for i in dict.fromkeys(labels.tolist()) if i >= 0]
        clusters = [np.flatnonzero(labels == i) for i in ids]
        return cls(clusters, np.flatnonzero(labels < 0))

    def as_sets(self) -> set[frozenset]:
        return {frozenset(c.tolist()) for c in self.clusters}

    def take(self, index) -> "Segmentation":
        """Map local indices through ``index`` (local -> global)."""
        index = np.asarray(index)
        return Segmentation([np.sort(index[c]) for c in self.clusters], np.sort(index[self.unassigned]))


def shift_points(points, offsets) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    o = np.asarray(offsets, dtype=float)
    if p.shape != o.shape:
        raise LengthMismatch(f"points {p.shape} vs offsets {o.shape}")
    return p + o


def _check(shifted, embeddings):
    p = np.asarray(shifted, dtype=float).reshape(-1, 3)
    f = np.asarray(embeddings, dtype=float)
    if f.ndim == 1:
        f = f.reshape(len(f), -1) if len(f) else f.reshape(0, 1)
    if len(p) != len(f):
        raise LengthMismatch(f"{len(p)} shifted points vs {len(f)} embeddings")
    return p, f


def joint_distance(p, f, k: int, idx, params: ClusterParams) -> np.ndarray:
    """``w1*|p_j - p_k| + w2*|f_j - f_k|`` for every ``j`` in ``idx``.

    Both clustering routes call this so their threshold tests see bit-identical
    values.
    """
    de = np.sqrt(((p[idx] - p[k]) ** 2).sum(axis=1))
    df = np.sqrt(((f[idx] - f[k]) ** 2).sum(axis=1))
    return params.w1 * de + params.w2 * df


def _finish(found: list[list[int]], n: int, params: ClusterParams) -> Segmentation:
    keep, dropped = [], []
    for c in found:
        if len(c) > params.min_cluster_size:
            keep.append(np.sort(np.asarray(c, dtype=np.intp)))
        else:
            dropped.extend(c)
    return Segmentation(keep, np.sort(np.asarray(dropped, dtype=np.intp)))


def cluster_points(shifted, embeddings, params: ClusterParams = ClusterParams()) -> Segmentation:
    """Breadth-first clustering exactly as the reference algorithm states it.

    Points are scanned in index order; each unvisited point seeds a queue and
    absorbs every unvisited point within joint distance ``r`` of a dequeued
    member.  Clusters with at most ``min_cluster_size`` points are dropped to
    ``unassigned``.  O(N^2).
    """
    p, f = _check(shifted, embeddings)
    n = len(p)
    visited = np.zeros(n, dtype=bool)
    found = []
    for i in range(n):
        if visited[i]:
            continue
        visited[i] = True
        queue = deque([i])
        members = [i]
        while queue:
            k = queue.popleft()
            cand = np.flatnonzero(~visited)
            if len(cand) == 0:
                break
            hit = cand[joint_distance(p, f, k, cand, params) < params.r]
            visited[hit] = True
            queue.extend(hit.tolist())
            members.extend(hit.tolist())
        found.append(members)
    return _finish(found, n, params)


_PROJ_DIM = 8
_CHUNK = 1 << 14


def _projected(f: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the top principal directions.

    Projection never increases a distance, so a ball query in the projected
    space returns a superset of the true neighbors.
    """
    if f.shape[1] <= _PROJ_DIM:
        return f
    centered = f - f.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    return centered @ vt[:_PROJ_DIM].T


def _pair_joint(p, f, a, b, params: ClusterParams) -> np.ndarray:
    # same arithmetic as joint_distance; (x - y)**2 is symmetric in fp
    de = np.sqrt(((p[a] - p[b]) ** 2).sum(axis=1))
    df = np.sqrt(((f[a] - f[b]) ** 2).sum(axis=1))
    return params.w1 * de + params.w2 * df


def cluster_points_accelerated(shifted, embeddings, params: ClusterParams = ClusterParams()) -> Segmentation:
    """Same output as :func:`cluster_points`, using a candidate-pair index.

    ``w1*de + w2*df < r`` implies ``de < r/w1`` and ``df < r/w2``, so
    candidate pairs come from one tree range search in whichever space is
    more selective.  The flood fill then runs layer by layer over those
    candidate lists, testing the exact joint distance only against points
    not yet visited.  Each seed still collects exactly its connected
    component, so the partition is unchanged.
    """
    p, f = _check(shifted, embeddings)
    n = len(p)
    if n == 0:
        return Segmentation()
    spaces = []
    if params.w1 > 0:
        spaces.append((p, params.r / params.w1))
    if params.w2 > 0:
        spaces.append((_projected(f), params.r / params.w2))
    trees = [(cKDTree(x), x, rad * (1 + 1e-9) + 1e-12) for x, rad in spaces]
    if len(trees) == 2:
        trees.sort(key=lambda t: _probe_count(*t))
    tree, _, radius = trees[0]

    pairs = tree.query_pairs(radius, output_type="ndarray")
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    cols = cols[np.argsort(rows, kind="stable")]
    indptr = np.zeros(n + 1, dtype=np.intp)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])

    visited = np.zeros(n, dtype=bool)
    found = []
    for i in range(n):
        if visited[i]:
            continue
        visited[i] = True
        members = [np.array([i])]
        frontier = np.array([i])
        while len(frontier):
            # candidate lists of the whole frontier, gathered from the CSR arrays
            starts, lengths = indptr[frontier], indptr[frontier + 1] - indptr[frontier]
            total = int(lengths.sum())
            if total == 0:
                break
            offsets = np.repeat(starts - np.cumsum(lengths) + lengths, lengths)
            cand = cols[np.arange(total) + offsets]
            src = np.repeat(frontier, lengths)
            open_ = ~visited[cand]
            cand, src = cand[open_], src[open_]
            if len(cand) == 0:
                break
            hit = np.unique(cand[_pair_joint(p, f, cand, src, params) < params.r])
            visited[hit] = True
            members.append(hit)
            frontier = hit
        found.append(np.concatenate(members).tolist())
    return _finish(found, n, params)


def _probe_count(tree, pts, radius) -> float:
    sample = pts[:: max(1, len(pts) // 32)]
    return float(np.mean(tree.query_ball_point(sample, radius, return_length=True)))
