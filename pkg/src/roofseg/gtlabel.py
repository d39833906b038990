"""Supervision derived from ground truth: boundary labels and center offsets."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInstance, MissingGroundTruth
from .geom import SpatialIndex
from .synthgen import PointCloud

DEFAULT_K_BOUNDARY = 8


class Semantic(enum.IntEnum):
    NON_ROOF = 0
    BOUNDARY = 1
    PLANE = 2


@dataclass
class LabelSet:
    semantic: np.ndarray  # (N,) int, values of Semantic
    offset: np.ndarray  # (N, 3)
    instance_id: np.ndarray  # (N,) int, -1 for non-roof

    def __len__(self) -> int:
        return len(self.semantic)

    @property
    def boundary_mask(self) -> np.ndarray:
        return self.semantic == Semantic.BOUNDARY


def instance_centers(points, instance_id, n_instances: int | None = None) -> np.ndarray:
    """Mean point of every instance id ``0 .. n_instances-1``."""
    pts = np.asarray(points, dtype=float)
    inst = np.asarray(instance_id)
    if n_instances is None:
        n_instances = int(inst.max()) + 1 if inst.size and inst.max() >= 0 else 0
    centers = np.empty((n_instances, 3))
    for i in range(n_instances):
        members = pts[inst == i]
        if len(members) == 0:
            raise EmptyInstance(f"instance {i} has no points")
        centers[i] = members.mean(axis=0)
    return centers


def boundary_mask(points, instance_id, k: int, index: SpatialIndex | None = None) -> np.ndarray:
    """True where any of a point's k nearest other points has another id."""
    inst = np.asarray(instance_id)
    index = index or SpatialIndex(points)
    if len(inst) < 2:
        return np.zeros(len(inst), dtype=bool)
    nbrs = np.stack(index.knn_all(k, include_self=False))
    return (inst[nbrs] != inst[:, None]).any(axis=1)


def derive_labels(cloud: PointCloud, k_boundary: int = DEFAULT_K_BOUNDARY) -> LabelSet:
    """Semantic class and offset-to-center vector for every point.

    Neighborhoods are built over roof points only, so clutter never turns a
    plane point into a boundary point.
    """
    if cloud.gt is None:
        raise MissingGroundTruth("derive_labels needs ground-truth instance ids")
    if k_boundary < 2:
        raise ValueError("k_boundary must be >= 2")
    inst = np.asarray(cloud.gt.instance_id)
    roof = inst >= 0
    n = len(inst)
    semantic = np.full(n, Semantic.NON_ROOF, dtype=np.int64)
    offset = np.zeros((n, 3))

    roof_idx = np.flatnonzero(roof)
    if len(roof_idx):
        roof_pts = cloud.points[roof_idx]
        roof_inst = inst[roof_idx]
        on_edge = boundary_mask(roof_pts, roof_inst, k_boundary)
        semantic[roof_idx] = np.where(on_edge, Semantic.BOUNDARY, Semantic.PLANE)
        present = np.unique(roof_inst)
        centers = np.zeros((int(present.max()) + 1, 3))
        for i in present:
            centers[i] = roof_pts[roof_inst == i].mean(axis=0)
        offset[roof_idx] = centers[roof_inst] - roof_pts
    return LabelSet(semantic, offset, inst.copy())
