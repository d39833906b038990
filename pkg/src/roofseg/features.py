"""Prediction providers standing in for the network's three output heads."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, MissingGroundTruth, TooManyInstances
from .geom import SpatialIndex, estimate_normals
from .gtlabel import LabelSet, Semantic
from .synthgen import PointCloud

DEFAULT_EMBED_DIM = 64
# codes sqrt(2)*margin*e_i sit 2*margin apart; 0.5 gives unit spacing
DEFAULT_CODE_MARGIN = 0.5
BOUNDARY_SPREAD_DEG = 20.0


@dataclass
class PredictionSet:
    semantic: np.ndarray  # (N,) int
    offset: np.ndarray  # (N, 3)
    embedding: np.ndarray  # (N, D)

    def __post_init__(self):
        self.semantic = np.asarray(self.semantic, dtype=np.int64)
        self.offset = np.asarray(self.offset, dtype=float).reshape(-1, 3)
        self.embedding = np.asarray(self.embedding, dtype=float)
        if self.embedding.ndim != 2:
            raise LengthMismatch("embedding must be (N, D)")
        n = len(self.semantic)
        if len(self.offset) != n or len(self.embedding) != n:
            raise LengthMismatch(
                f"semantic {n}, offset {len(self.offset)}, embedding {len(self.embedding)} rows"
            )

    def __len__(self) -> int:
        return len(self.semantic)

    @property
    def embed_dim(self) -> int:
        return self.embedding.shape[1]


@dataclass(frozen=True)
class NoiseSpec:
    """Corruption applied by the oracle provider.

    offset_sigma is relative to the cloud radius, embedding_sigma to the
    distance between instance codes (it sets the expected norm of the
    embedding error vector).  Boundary points get ``boundary_factor`` times
    the noise.

    ``spatial_correlation`` is the share of embedding-noise variance that is
    smooth across space: it is averaged over each point's ``smoothing_k``
    nearest neighbors, like the correlated errors of a real feature head.
    The rest is independent per point.
    """

    offset_sigma: float = 0.0
    embedding_sigma: float = 0.0
    semantic_flip_rate: float = 0.0
    seed: int = 0
    boundary_factor: float = 2.0
    spatial_correlation: float = 0.75
    smoothing_k: int = 16

    def __post_init__(self):
        if self.offset_sigma < 0 or self.embedding_sigma < 0:
            raise ValueError("noise sigmas must be >= 0")
        if not 0 <= self.semantic_flip_rate < 0.5:
            raise ValueError("semantic_flip_rate must lie in [0, 0.5)")
        if self.boundary_factor < 0:
            raise ValueError("boundary_factor must be >= 0")
        if not 0 <= self.spatial_correlation <= 1:
            raise ValueError("spatial_correlation must lie in [0, 1]")
        if self.smoothing_k < 1:
            raise ValueError("smoothing_k must be >= 1")


def instance_codes(n_instances: int, embed_dim: int, margin: float = DEFAULT_CODE_MARGIN) -> np.ndarray:
    """Orthogonal codes ``sqrt(2)*margin*e_i``; pairwise distance ``2*margin``."""
    if n_instances > embed_dim:
        raise TooManyInstances(f"{n_instances} instances do not fit in {embed_dim} dims")
    codes = np.zeros((n_instances, embed_dim))
    codes[np.arange(n_instances), np.arange(n_instances)] = math.sqrt(2) * margin
    return codes


def _flip(semantic, rate, classes, rng):
    out = semantic.copy()
    hit = rng.random(len(out)) < rate
    if rate == 0 or len(classes) < 2:
        return out
    for i in np.flatnonzero(hit):
        others = [c for c in classes if c != out[i]]
        out[i] = others[rng.integers(len(others))]
    return out


def _embedding_noise(pts, embed_dim, noise: NoiseSpec, rng) -> np.ndarray:
    """Noise rows with E|row|^2 = 1, partly smoothed over kNN neighborhoods."""
    n = len(pts)
    rho = noise.spatial_correlation
    white = rng.normal(size=(n, embed_dim))
    out = math.sqrt(1.0 - rho) * rng.normal(size=(n, embed_dim))
    if rho > 0:
        k = min(noise.smoothing_k, n)
        nbrs = SpatialIndex(pts).knn_all(k)
        # mean of k iid draws, rescaled back to unit variance
        smooth = white[np.stack(nbrs)].mean(axis=1) * math.sqrt(k)
        out += math.sqrt(rho) * smooth
    return out / math.sqrt(embed_dim)


def oracle_predictions(
    cloud: PointCloud,
    labels: LabelSet,
    noise: NoiseSpec = NoiseSpec(),
    embed_dim: int = DEFAULT_EMBED_DIM,
    margin: float = DEFAULT_CODE_MARGIN,
) -> PredictionSet:
    """Ground truth plus controlled noise, as an ideal network would predict."""
    if cloud.gt is None:
        raise MissingGroundTruth("oracle provider needs ground truth")
    if len(labels) != len(cloud):
        raise LengthMismatch(f"{len(labels)} labels for {len(cloud)} points")
    rng = np.random.default_rng(noise.seed)
    n = len(cloud)
    inst = labels.instance_id
    roof = inst >= 0
    n_inst = cloud.gt.n_instances
    codes = instance_codes(n_inst, embed_dim, margin)
    code_dist = 2 * margin

    classes = [Semantic.BOUNDARY, Semantic.PLANE]
    if not roof.all():
        classes = [Semantic.NON_ROOF] + classes
    semantic = _flip(labels.semantic.copy(), noise.semantic_flip_rate, classes, rng)

    pts = cloud.points
    radius = float(np.sqrt(((pts - pts.mean(axis=0)) ** 2).sum(axis=1).max())) if n else 1.0
    scale = np.where(labels.semantic == Semantic.BOUNDARY, noise.boundary_factor, 1.0)[:, None]

    offset = labels.offset + scale * rng.normal(0.0, noise.offset_sigma * radius, size=(n, 3))
    embedding = np.zeros((n, embed_dim))
    embedding[roof] = codes[inst[roof]]
    if noise.embedding_sigma > 0 and n:
        embedding += scale * _embedding_noise(pts, embed_dim, noise, rng) * (noise.embedding_sigma * code_dist)
    return PredictionSet(semantic, offset, embedding)


def handcrafted_predictions(points, k: int = 16, embed_dim: int = DEFAULT_EMBED_DIM) -> PredictionSet:
    """No-learning provider from local geometry.

    Embedding: normal (3), plane offset ``n . p`` (1), height (1), zero
    padded.  Offsets are zero.  A point is Boundary when the normals in its
    kNN neighborhood spread by more than 20 degrees.
    """
    if k < 3:
        raise ValueError("k must be >= 3")
    if embed_dim < 5:
        raise ValueError("handcrafted embedding needs embed_dim >= 5")
    pts = np.asarray(getattr(points, "points", points), dtype=float)
    n = len(pts)
    index = SpatialIndex(pts)
    normals = estimate_normals(pts, k, index)
    emb = np.zeros((n, embed_dim))
    emb[:, :3] = normals
    emb[:, 3] = np.einsum("ij,ij->i", normals, pts)
    emb[:, 4] = pts[:, 2]

    cos_lim = math.cos(math.radians(BOUNDARY_SPREAD_DEG))
    semantic = np.full(n, Semantic.PLANE, dtype=np.int64)
    for i, nbrs in enumerate(index.knn_all(min(k, n))):
        nn = normals[nbrs]
        nn = nn[np.linalg.norm(nn, axis=1) > 0]
        if len(nn) < 2:
            continue
        if np.abs(nn @ nn.T).min() < cos_lim:
            semantic[i] = Semantic.BOUNDARY
    return PredictionSet(semantic, np.zeros((n, 3)), emb)
