"""Training losses of the three-head network as plain numpy kernels.

Each kernel returns a :class:`LossValue` holding the scalar loss and the
analytic gradient with respect to its differentiable input, flattened.
They exist to check the math (against finite differences), not to train.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LabelOutOfRange, LengthMismatch, NoInstances

COS_EPS = 1e-8
REG_WEIGHT = 0.001
DEFAULT_MARGIN_PULL = 0.5
DEFAULT_MARGIN_PUSH = 1.5


@dataclass
class LossValue:
    value: float
    gradient: np.ndarray

    def __post_init__(self):
        self.gradient = np.ravel(np.asarray(self.gradient, dtype=float))


def classification_loss(logits, labels) -> LossValue:
    """Summed softmax cross-entropy over points."""
    z = np.asarray(logits, dtype=float)
    y = np.asarray(labels)
    if z.ndim != 2 or len(z) != len(y):
        raise LengthMismatch("logits must be (N, C) with one label per row")
    c = z.shape[1]
    if y.size and (y.min() < 0 or y.max() >= c):
        raise LabelOutOfRange(f"labels must lie in [0, {c})")
    zmax = z.max(axis=1, keepdims=True)
    ez = np.exp(z - zmax)
    sums = ez.sum(axis=1, keepdims=True)
    logsumexp = np.log(sums[:, 0]) + zmax[:, 0]
    rows = np.arange(len(y))
    value = float(np.sum(logsumexp - z[rows, y]))
    grad = ez / sums
    grad[rows, y] -= 1.0
    return LossValue(value, grad)


def offset_loss(pred_offsets, gt_offsets) -> LossValue:
    """Distance plus direction loss on offset vectors.

    Per point: ``|pred - gt| + (1 - cos(pred, gt))``.  The direction term is
    written as one minus the cosine so that aligned predictions are rewarded
    (the form printed with a plus sign would reward opposite directions).
    It is skipped when either vector is shorter than ``COS_EPS``.
    """
    p = np.asarray(pred_offsets, dtype=float)
    g = np.asarray(gt_offsets, dtype=float)
    if p.shape != g.shape:
        raise LengthMismatch(f"pred {p.shape} vs gt {g.shape}")
    diff = p - g
    dist = np.linalg.norm(diff, axis=1)
    grad = np.zeros_like(p)
    nz = dist > 0
    grad[nz] = diff[nz] / dist[nz, None]

    pn = np.linalg.norm(p, axis=1)
    gn = np.linalg.norm(g, axis=1)
    ok = (pn >= COS_EPS) & (gn >= COS_EPS)
    cos = np.zeros(len(p))
    cos[ok] = np.einsum("ij,ij->i", p[ok], g[ok]) / (pn[ok] * gn[ok])
    # d cos / d p = g/(|p||g|) - cos * p/|p|^2
    dcos = g[ok] / (pn[ok] * gn[ok])[:, None] - cos[ok, None] * p[ok] / (pn[ok] ** 2)[:, None]
    grad[ok] -= dcos
    value = float(dist.sum() + np.sum(1.0 - cos[ok]))
    return LossValue(value, grad)


def embedding_loss(
    embeddings,
    instance_id,
    margin_pull: float = DEFAULT_MARGIN_PULL,
    margin_push: float = DEFAULT_MARGIN_PUSH,
) -> LossValue:
    """Hinged discriminative loss: pull + push + 0.001 * regularization.

    pull: mean over instances of the mean squared hinge ``max(0, |f - mu| - margin_pull)``.
    push: mean over instance pairs of ``max(0, 2*margin_push - |mu_a - mu_b|)^2``.
    regularization: mean norm of the instance means.
    """
    f = np.asarray(embeddings, dtype=float)
    inst = np.asarray(instance_id)
    if f.ndim != 2 or len(f) != len(inst):
        raise LengthMismatch("embeddings must be (N, D) with one id per row")
    if margin_pull <= 0 or margin_push <= 0:
        raise ValueError("margins must be positive")
    ids = np.unique(inst)
    k = len(ids)
    if k == 0:
        raise NoInstances("embedding loss needs at least one instance")

    grad = np.zeros_like(f)
    means = np.empty((k, f.shape[1]))
    members = []
    pull = 0.0
    for a, i in enumerate(ids):
        m = np.flatnonzero(inst == i)
        members.append(m)
        mu = f[m].mean(axis=0)
        means[a] = mu
        u = f[m] - mu
        n = np.linalg.norm(u, axis=1)
        h = np.maximum(0.0, n - margin_pull)
        pull += np.mean(h * h) / k
        gu = np.zeros_like(u)
        act = h > 0
        gu[act] = (2 * h[act] / n[act])[:, None] * u[act]
        grad[m] += (gu - gu.mean(axis=0)) / (len(m) * k)

    push = 0.0
    n_pairs = k * (k - 1) // 2
    for a in range(k):
        for b in range(a + 1, k):
            d = means[a] - means[b]
            dn = np.linalg.norm(d)
            h = max(0.0, 2 * margin_push - dn)
            if h <= 0:
                continue
            push += h * h / n_pairs
            if dn == 0:
                continue
            gmu = -2 * h * d / dn / n_pairs
            grad[members[a]] += gmu / len(members[a])
            grad[members[b]] -= gmu / len(members[b])

    norms = np.linalg.norm(means, axis=1)
    reg = float(norms.mean())
    for a in range(k):
        if norms[a] > 0:
            grad[members[a]] += REG_WEIGHT * means[a] / norms[a] / (k * len(members[a]))

    return LossValue(float(pull + push + REG_WEIGHT * reg), grad)


def total_loss(cls: LossValue, reg: LossValue, emb: LossValue) -> LossValue:
    return LossValue(
        cls.value + reg.value + emb.value,
        np.concatenate([cls.gradient, reg.gradient, emb.gradient]),
    )
