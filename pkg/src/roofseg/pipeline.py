"""classify-filter -> shift -> cluster -> refine, on one building."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster import ClusterParams, Segmentation, cluster_points_accelerated, shift_points
from .errors import LengthMismatch
from .features import PredictionSet
from .gtlabel import Semantic
from .refine import refine_boundaries


@dataclass(frozen=True)
class Variant:
    """A method configuration; ``boundary_aware`` toggles classify + refine."""

    name: str
    w1: float
    w2: float
    boundary_aware: bool


FULL = Variant("joint+boundary", 0.1, 0.9, True)
ABLATIONS = (
    Variant("euclidean", 1.0, 0.0, False),
    Variant("embedding", 0.0, 1.0, False),
    Variant("joint", 0.1, 0.9, False),
    FULL,
)


def segment(
    points,
    pred: PredictionSet,
    params: ClusterParams = ClusterParams(),
    boundary_aware: bool = True,
    refine_weights=(1.0, 1.0),
) -> Segmentation:
    """Segment one building into plane instances.

    Points predicted NonRoof are dropped up front and end up in
    ``unassigned``.  With ``boundary_aware`` only Plane points are clustered
    and every other roof point is attached afterwards by
    :func:`refine_boundaries`; without it all roof points are clustered and
    whatever lands in undersized clusters stays unassigned.
    """
    pts = np.asarray(getattr(points, "points", points), dtype=float)
    if len(pts) != len(pred):
        raise LengthMismatch(f"{len(pts)} points vs {len(pred)} predictions")
    roof = pred.semantic != Semantic.NON_ROOF
    if boundary_aware:
        use = pred.semantic == Semantic.PLANE
    else:
        use = roof
    idx = np.flatnonzero(use)
    shifted = shift_points(pts[idx], pred.offset[idx])
    local = cluster_points_accelerated(shifted, pred.embedding[idx], params)
    seg = local.take(idx)
    if not boundary_aware:
        left = np.ones(len(pts), dtype=bool)
        for c in seg.clusters:
            left[c] = False
        return Segmentation(seg.clusters, np.flatnonzero(left))
    pending = np.sort(np.concatenate([seg.unassigned, np.flatnonzero(roof & ~use)])).astype(np.intp)
    refined = refine_boundaries(Segmentation(seg.clusters, pending), pts, pred.embedding, refine_weights)
    return Segmentation(refined.clusters, np.flatnonzero(~roof))


def run_variant(points, pred: PredictionSet, variant: Variant, r: float = 0.5, min_cluster_size: int = 100) -> Segmentation:
    params = ClusterParams(r=r, w1=variant.w1, w2=variant.w2, min_cluster_size=min_cluster_size)
    return segment(points, pred, params, boundary_aware=variant.boundary_aware)
