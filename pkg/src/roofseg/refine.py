"""Boundary refinement: attach leftover points to the closest planar patch."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster import Segmentation
from .errors import DegenerateInput, NoClusters
from .geom import PlaneModel, fit_plane


@dataclass
class PatchSummary:
    plane: PlaneModel
    embed_center: np.ndarray


def summarize_patch(cluster, points, embeddings) -> PatchSummary:
    """Plane fit over the cluster's (unshifted) points and its mean embedding."""
    idx = np.asarray(cluster, dtype=np.intp)
    if len(idx) < 3:
        raise DegenerateInput(f"patch has {len(idx)} points, need 3")
    pts = np.asarray(points, dtype=float)[idx]
    emb = np.asarray(embeddings, dtype=float)[idx]
    return PatchSummary(fit_plane(pts), emb.mean(axis=0))


def assignment_cost(points, embeddings, summaries: list[PatchSummary], weights=(1.0, 1.0)) -> np.ndarray:
    """(n_points, n_patches) matrix of point-to-plane + embedding distance."""
    pts = np.asarray(points, dtype=float)
    emb = np.asarray(embeddings, dtype=float)
    cost = np.empty((len(pts), len(summaries)))
    for k, s in enumerate(summaries):
        geo = np.abs(pts @ s.plane.normal + s.plane.offset)
        feat = np.sqrt(((emb - s.embed_center) ** 2).sum(axis=1))
        cost[:, k] = weights[0] * geo + weights[1] * feat
    return cost


def refine_boundaries(seg: Segmentation, points, embeddings, weights=(1.0, 1.0)) -> Segmentation:
    """Assign every unassigned point to its cheapest patch in one pass.

    Patch summaries are computed once from the incoming clusters, so the
    result does not depend on the order unassigned points are visited.
    Patches whose points are degenerate for a plane fit are dissolved and
    their points reassigned along with the rest.  Ties go to the lower
    cluster index.
    """
    summaries, kept, extra = [], [], [seg.unassigned]
    for c in seg.clusters:
        try:
            summaries.append(summarize_patch(c, points, embeddings))
            kept.append(c)
        except DegenerateInput:
            extra.append(c)
    if not kept:
        raise NoClusters("no planar patch to refine against")
    todo = np.concatenate(extra).astype(np.intp)
    if len(todo) == 0:
        return Segmentation([c.copy() for c in kept], np.empty(0, dtype=np.intp))
    pts = np.asarray(points, dtype=float)
    emb = np.asarray(embeddings, dtype=float)
    choice = np.argmin(assignment_cost(pts[todo], emb[todo], summaries, weights), axis=1)
    out = [np.sort(np.concatenate([c, todo[choice == k]])) for k, c in enumerate(kept)]
    return Segmentation(out, np.empty(0, dtype=np.intp))
