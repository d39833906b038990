"""Matplotlib figures for segmentations and metric tables, written straight to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import METRIC_NAMES  # noqa: E402

_STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}

_PRETTY = {"cov": "Cov", "wcov": "WCov", "mprec": "mPrec", "mrec": "mRec"}
UNASSIGNED_COLOR = (0.75, 0.75, 0.75, 1.0)


def label_colors(labels, ranks: dict | None = None) -> np.ndarray:
    """RGBA per point; instances cycle through tab10, unassigned is grey.

    ``ranks`` optionally fixes the palette slot of given ids.
    """
    labels = np.asarray(labels)
    cmap = plt.get_cmap("tab10")
    colors = np.tile(np.array(UNASSIGNED_COLOR), (len(labels), 1))
    ids = np.unique(labels[labels >= 0])
    ranks = dict(ranks or {})
    free = (r for r in range(len(ids) + len(ranks)) if r not in ranks.values())
    for i in ids:
        if i not in ranks:
            ranks[i] = next(free)
        colors[labels == i] = cmap(ranks[i] % cmap.N)
    return colors


def matched_ranks(pred, gt) -> dict:
    """Give each predicted id the palette slot of its most-overlapping GT id."""
    pred, gt = np.asarray(pred), np.asarray(gt)
    gids = np.unique(gt[gt >= 0]).tolist()
    out, used = {}, set()
    for i in np.unique(pred[pred >= 0]):
        hits = gt[(pred == i) & (gt >= 0)]
        if len(hits):
            g = int(np.bincount(hits).argmax())
            if g not in used:
                used.add(g)
                out[int(i)] = gids.index(g)
    return out


def plot_segmentation(points, labels, path, title: str | None = None, gt_labels=None) -> None:
    """Top, front and side views colored by instance; GT row added when given."""
    pts = np.asarray(points, dtype=float)
    panels = [("prediction", labels)]
    if gt_labels is not None:
        panels.append(("ground truth", gt_labels))
    views = (("top", 0, 1), ("front", 0, 2), ("side", 1, 2))
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(len(panels), 3, figsize=(10.0, 3.0 * len(panels)), squeeze=False)
        ranks = matched_ranks(labels, gt_labels) if gt_labels is not None else None
        for row, (name, lab) in enumerate(panels):
            c = label_colors(lab, ranks if row == 0 else None)
            for ax, (view, i, j) in zip(axes[row], views):
                ax.scatter(pts[:, i], pts[:, j], c=c, s=2, linewidths=0)
                ax.set_aspect("equal", adjustable="datalim")
                ax.set_xlabel("xyz"[i])
                ax.set_ylabel("xyz"[j])
                ax.set_title(f"{name}: {view}")
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_method_metrics(rows: dict, path, title: str = "mean metrics by method") -> None:
    """Grouped bars; ``rows`` maps a method name to its MetricsReport."""
    methods = list(rows)
    x = np.arange(len(METRIC_NAMES))
    width = 0.8 / max(1, len(methods))
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 3.2))
        for j, m in enumerate(methods):
            vals = [getattr(rows[m], name) for name in METRIC_NAMES]
            ax.bar(x + (j - (len(methods) - 1) / 2) * width, vals, width, label=m)
        ax.set_xticks(x)
        ax.set_xticklabels([_PRETTY[n] for n in METRIC_NAMES])
        ax.set_ylim(0, 1.0)
        ax.set_ylabel("score")
        ax.set_title(title)
        ax.legend(frameon=False, loc="upper left", bbox_to_anchor=(1.0, 1.0))
        fig.savefig(path)
        plt.close(fig)


def plot_per_building(per_method: dict, path, metric: str = "cov") -> None:
    """Strip plot of one metric per building, one column per method."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(1.6 + 1.4 * len(per_method), 3.2))
        rng = np.random.default_rng(0)
        for j, (m, reports) in enumerate(per_method.items()):
            vals = np.array([getattr(r, metric) for r in reports])
            jitter = rng.uniform(-0.15, 0.15, len(vals))
            ax.scatter(np.full(len(vals), j) + jitter, vals, s=10, alpha=0.7)
            if len(vals):
                ax.hlines(vals.mean(), j - 0.3, j + 0.3, color="k", linewidth=1.5)
        ax.set_xticks(range(len(per_method)))
        ax.set_xticklabels(list(per_method))
        ax.set_ylim(-0.02, 1.05)
        ax.set_ylabel(metric)
        ax.set_title(f"per-building {metric} (bar = mean)")
        fig.savefig(path)
        plt.close(fig)
