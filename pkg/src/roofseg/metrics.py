"""Instance-segmentation quality: Cov, WCov, mPrec, mRec."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .cluster import Segmentation
from .errors import BothEmpty, EmptyGroundTruth, EmptyList, LengthMismatch

IOU_THRESHOLD = 0.5
METRIC_NAMES = ("cov", "wcov", "mprec", "mrec")


@dataclass(frozen=True)
class MetricsReport:
    cov: float
    wcov: float
    mprec: float
    mrec: float
    n_gt_instances: int = 0
    n_pred_instances: int = 0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.cov, self.wcov, self.mprec, self.mrec)

    def as_dict(self) -> dict:
        return asdict(self)


def iou(a, b) -> float:
    a, b = set(np.asarray(a).tolist()), set(np.asarray(b).tolist())
    union = len(a | b)
    if union == 0:
        raise BothEmpty("IoU of two empty sets is undefined")
    return len(a & b) / union


def iou_matrix(gt_labels, pred_labels) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """IoU between every GT instance (rows) and predicted instance (cols).

    Labels are per-point ids, negative for "not an instance".  Also returns
    the GT and predicted instance sizes.
    """
    g = np.asarray(gt_labels)
    p = np.asarray(pred_labels)
    gids = np.unique(g[g >= 0])
    pids = np.unique(p[p >= 0])
    gi = np.searchsorted(gids, g)
    pi = np.searchsorted(pids, p)
    inter = np.zeros((len(gids), len(pids)))
    both = (g >= 0) & (p >= 0)
    np.add.at(inter, (gi[both], pi[both]), 1)
    gsize = np.array([(g == i).sum() for i in gids], dtype=float)
    psize = np.array([(p == i).sum() for i in pids], dtype=float)
    union = gsize[:, None] + psize[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        m = np.where(union > 0, inter / union, 0.0)
    return m, gsize, psize


def evaluate(pred, gt) -> MetricsReport:
    """Score a prediction against ground truth.

    ``pred`` is a :class:`Segmentation` or per-point ids; ``gt`` a
    :class:`GroundTruth` or per-point ids.  Points with a negative GT id
    (non-roof) are removed from both sides first.  Matching is best-IoU, not
    one-to-one; the 0.5 threshold is strict.
    """
    gt = np.asarray(getattr(gt, "instance_id", gt))
    if isinstance(pred, Segmentation):
        pred = pred.labels(len(gt))
    pred = np.asarray(pred)
    if pred.shape != gt.shape:
        raise LengthMismatch(f"{len(pred)} predicted labels vs {len(gt)} ground-truth labels")
    roof = gt >= 0
    pred, gt = pred[roof], gt[roof]
    m, gsize, _ = iou_matrix(gt, pred)
    n_gt, n_pred = m.shape
    if n_gt == 0:
        raise EmptyGroundTruth("ground truth has no roof instances")
    if n_pred == 0:
        return MetricsReport(0.0, 0.0, 0.0, 0.0, n_gt, 0)
    best_gt = m.max(axis=1)
    best_pred = m.max(axis=0)
    cov = float(best_gt.mean())
    wcov = float((gsize / gsize.sum()) @ best_gt)
    mrec = float(np.mean(best_gt > IOU_THRESHOLD))
    mprec = float(np.mean(best_pred > IOU_THRESHOLD))
    return MetricsReport(cov, wcov, mprec, mrec, n_gt, n_pred)


def aggregate(reports) -> MetricsReport:
    """Unweighted mean of each metric over buildings."""
    reports = list(reports)
    if not reports:
        raise EmptyList("cannot aggregate zero reports")
    # fsum is exactly rounded, so the mean does not depend on report order
    mean = [math.fsum(getattr(r, name) for r in reports) / len(reports) for name in METRIC_NAMES]
    return MetricsReport(
        *mean,
        n_gt_instances=sum(r.n_gt_instances for r in reports),
        n_pred_instances=sum(r.n_pred_instances for r in reports),
    )
