"""Roof-plane instance segmentation of building point clouds.

The pipeline filters non-roof points, shifts plane points toward their
predicted instance centers, clusters them jointly in Euclidean and embedding
space, and attaches boundary points to the closest resulting patch.
"""

from .cluster import ClusterParams, Segmentation, cluster_points, cluster_points_accelerated
from .features import NoiseSpec, PredictionSet, handcrafted_predictions, oracle_predictions
from .gtlabel import LabelSet, Semantic, derive_labels
from .metrics import MetricsReport, aggregate, evaluate
from .pipeline import segment
from .refine import refine_boundaries
from .synthgen import PointCloud, RoofFamily, RoofSpec, generate_building, normalize, random_spec

__version__ = "0.1.0"

__all__ = [
    "ClusterParams",
    "LabelSet",
    "MetricsReport",
    "NoiseSpec",
    "PointCloud",
    "PredictionSet",
    "RoofFamily",
    "RoofSpec",
    "Segmentation",
    "Semantic",
    "aggregate",
    "cluster_points",
    "cluster_points_accelerated",
    "derive_labels",
    "evaluate",
    "generate_building",
    "handcrafted_predictions",
    "normalize",
    "oracle_predictions",
    "random_spec",
    "refine_boundaries",
    "segment",
]
