"""Pipeline configuration: every tunable in one place, stored as ``key = value`` lines."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .baselines import RansacParams, RegionGrowParams
from .cluster import ClusterParams
from .errors import ConfigError
from .features import NoiseSpec

PROVIDERS = ("oracle", "handcrafted")


@dataclass(frozen=True)
class PipelineConfig:
    # clustering
    r: float = 0.5
    w1: float = 0.1
    w2: float = 0.9
    tn: int = 100
    # labels and refinement
    k_boundary: int = 8
    refine_plane_weight: float = 1.0
    refine_embed_weight: float = 1.0
    # prediction provider: oracle, handcrafted or file:<path>
    provider: str = "oracle"
    embed_dim: int = 64
    handcrafted_k: int = 16
    offset_sigma: float = 0.0
    embedding_sigma: float = 0.0
    flip_rate: float = 0.0
    boundary_factor: float = 2.0
    spatial_correlation: float = 0.75
    # baselines
    ransac_dist: float = 0.03
    ransac_min_points: int = 100
    ransac_iterations: int = 500
    rg_angle: float = 25.0
    rg_dist: float = 0.05
    rg_k: int = 30
    rg_min_points: int = 100
    # execution
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """Build every parameter object once so bad values fail at load time."""
        try:
            self.cluster_params()
            self.noise_spec(0)
            self.ransac_params()
            self.region_grow_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.k_boundary < 1:
            raise ConfigError("k_boundary must be >= 1")
        if self.refine_plane_weight < 0 or self.refine_embed_weight < 0:
            raise ConfigError("refine weights must be >= 0")
        if self.refine_plane_weight + self.refine_embed_weight <= 0:
            raise ConfigError("refine weights must not both be 0")
        if self.embed_dim < 1:
            raise ConfigError("embed_dim must be >= 1")
        if self.handcrafted_k < 3:
            raise ConfigError("handcrafted_k must be >= 3")
        if self.provider == "handcrafted" and self.embed_dim < 5:
            raise ConfigError("the handcrafted provider needs embed_dim >= 5")
        if self.provider not in PROVIDERS and not (self.provider.startswith("file:") and len(self.provider) > 5):
            raise ConfigError(f"provider must be oracle, handcrafted or file:<path>, got {self.provider!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def cluster_params(self) -> ClusterParams:
        return ClusterParams(r=self.r, w1=self.w1, w2=self.w2, min_cluster_size=self.tn)

    def noise_spec(self, seed: int) -> NoiseSpec:
        return NoiseSpec(
            offset_sigma=self.offset_sigma,
            embedding_sigma=self.embedding_sigma,
            semantic_flip_rate=self.flip_rate,
            seed=seed,
            boundary_factor=self.boundary_factor,
            spatial_correlation=self.spatial_correlation,
        )

    def ransac_params(self) -> RansacParams:
        return RansacParams(self.ransac_dist, self.ransac_min_points, self.ransac_iterations, self.seed)

    def region_grow_params(self) -> RegionGrowParams:
        return RegionGrowParams(self.rg_angle, self.rg_dist, self.rg_k, self.rg_min_points)

    @property
    def refine_weights(self) -> tuple[float, float]:
        return (self.refine_plane_weight, self.refine_embed_weight)

    def replace(self, **changes) -> "PipelineConfig":
        unknown = set(changes) - set(field_types())
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in fields(self))

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "PipelineConfig":
        values = {}
        for no, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key:
                raise ConfigError(f"{source}:{no}: expected 'key = value'")
            if key in values:
                raise ConfigError(f"{source}:{no}: duplicate key {key!r}")
            values[key] = parse_value(key, value, f"{source}:{no}")
        return cls().replace(**values)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"), str(path))

    def save(self, path) -> None:
        from .io import atomic_write

        atomic_write(path, self.to_text())


def field_types() -> dict[str, type]:
    # annotations are strings under postponed evaluation
    names = {"int": int, "float": float, "str": str}
    return {f.name: names[f.type] for f in fields(PipelineConfig)}


def parse_value(key: str, text: str, where: str = "") -> object:
    types = field_types()
    prefix = f"{where}: " if where else ""
    if key not in types:
        raise ConfigError(f"{prefix}unknown config key {key!r}")
    kind = types[key]
    try:
        value = kind(text)
    except ValueError:
        raise ConfigError(f"{prefix}{key} expects {kind.__name__}, got {text!r}") from None
    if kind is float and not math.isfinite(value):
        raise ConfigError(f"{prefix}{key} must be finite")
    return value
