"""Geometric kernels: plane fitting, point-to-plane distance, kNN search, normals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateInput

# eigenvalue ratio below which a neighborhood is treated as collinear
_RANK_TOL = 1e-12
_SIGN_TOL = 1e-12


@dataclass(frozen=True)
class PlaneModel:
    """Plane ``{q : normal . q + offset = 0}`` with a unit normal."""

    normal: np.ndarray
    offset: float
    rms_residual: float = 0.0

    @classmethod
    def from_normal_point(cls, normal, point) -> "PlaneModel":
        n = np.asarray(normal, dtype=float)
        n = canonical_sign(n / np.linalg.norm(n))
        return cls(n, float(-n @ np.asarray(point, dtype=float)), 0.0)

    def signed_distance(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.normal + self.offset


def canonical_sign(n: np.ndarray) -> np.ndarray:
    """Flip ``n`` so that z >= 0, falling back to y then x on ties."""
    for c in (n[2], n[1], n[0]):
        if abs(c) > _SIGN_TOL:
            return n if c > 0 else -n
    return n


def _canonical_sign_rows(normals: np.ndarray) -> np.ndarray:
    sign = np.ones(len(normals))
    decided = np.zeros(len(normals), dtype=bool)
    for axis in (2, 1, 0):
        c = normals[:, axis]
        pick = ~decided & (np.abs(c) > _SIGN_TOL)
        sign[pick] = np.where(c[pick] > 0, 1.0, -1.0)
        decided |= pick
    return normals * sign[:, None]


def fit_plane(points) -> PlaneModel:
    """Total least-squares plane through the centroid of ``points``.

    The normal is the eigenvector of the smallest covariance eigenvalue.
    Raises :class:`DegenerateInput` for fewer than three points or a
    collinear set.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) < 3:
        raise DegenerateInput(f"need at least 3 points to fit a plane, got {len(pts)}")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered / len(pts)
    w, v = np.linalg.eigh(cov)
    if w[2] <= 0 or w[1] <= _RANK_TOL * w[2]:
        raise DegenerateInput("points are collinear or coincident")
    normal = canonical_sign(v[:, 0])
    normal = normal / np.linalg.norm(normal)
    resid = centered @ normal
    rms = float(np.sqrt(np.mean(resid * resid)))
    return PlaneModel(normal, float(-normal @ centroid), rms)


def point_plane_distance(p, plane: PlaneModel):
    """Unsigned orthogonal distance; accepts one point or an (N, 3) array."""
    return np.abs(np.asarray(p, dtype=float) @ plane.normal + plane.offset)


class SpatialIndex:
    """Immutable kNN / radius index over a fixed point set.

    Results are exact: candidate distances from the tree are recomputed
    with the same squared-distance formula a linear scan uses, and ties are
    broken by ascending index.
    """

    _EXTRA = 4

    def __init__(self, points):
        pts = np.array(points, dtype=float).reshape(-1, 3)
        pts.setflags(write=False)
        self._points = pts
        self._tree = cKDTree(pts) if len(pts) else None

    @property
    def points(self) -> np.ndarray:
        return self._points

    def __len__(self) -> int:
        return len(self._points)

    def _sorted_candidates(self, q, cand, exclude):
        cand = np.asarray(cand, dtype=np.intp)
        if exclude is not None:
            cand = cand[cand != exclude]
        diff = self._points[cand] - q
        d2 = (diff * diff).sum(axis=1)
        order = np.lexsort((cand, d2))
        return cand[order], d2[order]

    def _knn_one(self, q, k, exclude, cand):
        n = len(self._points) - (0 if exclude is None else 1)
        k = min(k, n)
        if k <= 0:
            return np.empty(0, dtype=np.intp)
        cand, d2 = self._sorted_candidates(q, cand, exclude)
        if len(cand) < n:
            # a point outside the candidate set could tie or undercut the k-th
            kth = d2[k - 1]
            if len(cand) <= k or not kth < d2[-1] * (1 - 1e-9) - 1e-300:
                radius = np.sqrt(kth) * (1 + 1e-7) + 1e-12
                cand = self._tree.query_ball_point(q, radius)
                cand, d2 = self._sorted_candidates(q, cand, exclude)
        return cand[:k]

    def knn(self, query, k: int) -> np.ndarray:
        """Indices of the ``min(k, N)`` nearest points, ascending distance."""
        if k < 1:
            raise ValueError("k must be >= 1")
        if self._tree is None:
            return np.empty(0, dtype=np.intp)
        q = np.asarray(query, dtype=float)
        kk = min(k + self._EXTRA, len(self._points))
        _, idx = self._tree.query(q, kk)
        return self._knn_one(q, k, None, np.atleast_1d(idx))

    def knn_all(self, k: int, include_self: bool = True) -> list[np.ndarray]:
        """kNN of every indexed point.

        With ``include_self=False`` the query point itself is excluded and
        the k nearest *other* points are returned.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        n = len(self._points)
        if n == 0:
            return []
        kk = min(k + 1 + self._EXTRA, n)
        _, idx = self._tree.query(self._points, kk)
        idx = idx.reshape(n, kk).astype(np.intp)
        rows = np.arange(n)
        if not include_self:
            # push the query point itself to the end of its row
            idx = np.where(idx == rows[:, None], n, idx)
        valid = idx < n
        safe = np.where(valid, idx, 0)
        diff = self._points[safe] - self._points[:, None, :]
        d2 = np.where(valid, (diff * diff).sum(axis=2), np.inf)
        # (d2, index) order: sort by index, then stable-sort by distance
        o = np.argsort(np.where(valid, idx, n), axis=1, kind="stable")
        idx, d2 = np.take_along_axis(idx, o, 1), np.take_along_axis(d2, o, 1)
        o = np.argsort(d2, axis=1, kind="stable")
        idx, d2 = np.take_along_axis(idx, o, 1), np.take_along_axis(d2, o, 1)
        m = n - (0 if include_self else 1)
        kq = min(k, m)
        if kq <= 0:
            return [np.empty(0, dtype=np.intp) for _ in range(n)]
        n_valid = valid.sum(axis=1)
        if kk >= n:
            ambiguous = np.zeros(n, dtype=bool)
        else:
            last = d2[rows, n_valid - 1]
            ambiguous = (n_valid <= kq) | ~(d2[:, kq - 1] < last * (1 - 1e-9) - 1e-300)
        out = list(idx[:, :kq])
        for i in np.flatnonzero(ambiguous):
            out[i] = self._knn_one(self._points[i], k, None if include_self else i, idx[i][idx[i] < n])
        return out

    def radius(self, query, r: float) -> np.ndarray:
        """Indices within distance ``r`` (inclusive), ascending distance."""
        if self._tree is None:
            return np.empty(0, dtype=np.intp)
        q = np.asarray(query, dtype=float)
        cand = self._tree.query_ball_point(q, r * (1 + 1e-7) + 1e-12)
        cand, d2 = self._sorted_candidates(q, cand, None)
        return cand[d2 <= r * r]


def knn(index: SpatialIndex, query, k: int) -> np.ndarray:
    return index.knn(query, k)


def estimate_normals(points, k: int, index: SpatialIndex | None = None) -> np.ndarray:
    """Per-point normals from a plane fit over each point's k nearest points.

    Rows are zero where the neighborhood is degenerate (collinear or
    coincident).  Signs follow :func:`canonical_sign`.
    """
    if k < 3:
        raise ValueError("k must be >= 3")
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        return np.zeros((0, 3))
    index = index or SpatialIndex(pts)
    k = min(k, len(pts))
    nbrs = np.stack([row for row in index.knn_all(k)])
    local = pts[nbrs]
    centered = local - local.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / k
    w, v = np.linalg.eigh(cov)
    normals = v[:, :, 0]
    normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    normals = _canonical_sign_rows(normals)
    bad = (w[:, 2] <= 0) | (w[:, 1] <= _RANK_TOL * w[:, 2])
    normals[bad] = 0.0
    return normals
