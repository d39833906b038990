"""Synthetic buildings: parametric roofs sampled into labeled point clouds.

Every roof is a set of planar faces.  A face is stored as one or more convex
polygons in the xy footprint plus the height function ``z = a*x + b*y + c``
of its plane, so sampling uniformly in the footprint of a face is uniform by
true surface area up to a constant per face.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidSpec
from .geom import PlaneModel


class RoofFamily(str, enum.Enum):
    GABLE = "gable"
    HIP = "hip"
    PYRAMID = "pyramid"
    CROSS_GABLE = "crossgable"
    SALTBOX = "saltbox"
    MANSARD = "mansard"


FACE_COUNT = {
    RoofFamily.GABLE: 2,
    RoofFamily.SALTBOX: 2,
    RoofFamily.HIP: 4,
    RoofFamily.PYRAMID: 4,
    RoofFamily.MANSARD: 4,
    RoofFamily.CROSS_GABLE: 6,
}

# (name, default) of the shape ratios each family takes, all in (0, 1)
RATIO_NAMES = {
    RoofFamily.GABLE: (),
    RoofFamily.PYRAMID: (),
    RoofFamily.SALTBOX: (("ridge_position", 0.35),),
    RoofFamily.HIP: (("hip_inset", 0.4),),
    RoofFamily.MANSARD: (("break_run", 0.35), ("break_rise", 0.7)),
    RoofFamily.CROSS_GABLE: (
        ("wing_width", 0.85),
        ("wing_rise", 0.7),
        ("wing_length", 0.45),
    ),
}


@dataclass(frozen=True)
class RoofSpec:
    family: RoofFamily
    width: float = 10.0
    depth: float = 8.0
    ridge_height: float = 6.0
    eave_height: float = 3.0
    ratios: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", RoofFamily(self.family))
        if self.ratios is None:
            defaults = tuple(v for _, v in RATIO_NAMES[self.family])
            object.__setattr__(self, "ratios", defaults)
        else:
            object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))

    def validate(self) -> None:
        for name in ("width", "depth", "ridge_height", "eave_height"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidSpec(f"{name} must be positive, got {v}")
        if self.ridge_height <= self.eave_height:
            raise InvalidSpec("ridge_height must exceed eave_height")
        expected = len(RATIO_NAMES[self.family])
        if len(self.ratios) != expected:
            raise InvalidSpec(
                f"{self.family.value} takes {expected} ratios, got {len(self.ratios)}"
            )
        for (name, _), v in zip(RATIO_NAMES[self.family], self.ratios):
            if not 0 < v < 1:
                raise InvalidSpec(f"ratio {name} must lie in (0, 1), got {v}")
        if self.family is RoofFamily.MANSARD and math.isclose(self.ratios[0], self.ratios[1]):
            raise InvalidSpec("mansard break_run == break_rise makes the two slopes coplanar")

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.depth)


@dataclass(frozen=True)
class Face:
    """Planar roof face: convex xy polygons under ``z = a*x + b*y + c``."""

    pieces: tuple[np.ndarray, ...]
    coeffs: tuple[float, float, float]

    def height(self, xy: np.ndarray) -> np.ndarray:
        a, b, c = self.coeffs
        return a * xy[..., 0] + b * xy[..., 1] + c

    @property
    def plane(self) -> PlaneModel:
        a, b, c = self.coeffs
        n = np.array([-a, -b, 1.0])
        s = np.linalg.norm(n)
        return PlaneModel(n / s, -c / s, 0.0)

    @property
    def slope_factor(self) -> float:
        a, b, _ = self.coeffs
        return math.sqrt(1.0 + a * a + b * b)


@dataclass(frozen=True)
class Edge:
    """Line segment shared by two adjacent faces."""

    faces: tuple[int, int]
    start: np.ndarray
    end: np.ndarray


@dataclass
class GroundTruth:
    """Per-point instance ids (-1 = non-roof) and, when known, face planes."""

    instance_id: np.ndarray
    face_planes: list[PlaneModel] = field(default_factory=list)

    @property
    def n_instances(self) -> int:
        if self.face_planes:
            return len(self.face_planes)
        inst = np.asarray(self.instance_id)
        return int(inst.max()) + 1 if inst.size and inst.max() >= 0 else 0


@dataclass
class PointCloud:
    """Points plus optional ground truth.

    ``centroid`` and ``scale`` hold the inverse of any normalization applied:
    original = points * scale + centroid.
    """

    points: np.ndarray
    gt: GroundTruth | None = None
    centroid: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scale: float = 1.0

    def __len__(self) -> int:
        return len(self.points)

    @property
    def roof_mask(self) -> np.ndarray:
        if self.gt is None:
            return np.ones(len(self.points), dtype=bool)
        return self.gt.instance_id >= 0


def _plane_through(p0, p1, p2) -> tuple[float, float, float]:
    A = np.array([[p[0], p[1], 1.0] for p in (p0, p1, p2)])
    z = np.array([p[2] for p in (p0, p1, p2)])
    a, b, c = np.linalg.solve(A, z)
    return float(a), float(b), float(c)


def _face(pieces, p0, p1, p2) -> Face:
    return Face(tuple(np.asarray(p, dtype=float) for p in pieces), _plane_through(p0, p1, p2))


def _edge(i, j, a, b) -> Edge:
    return Edge((i, j), np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def roof_geometry(spec: RoofSpec) -> tuple[list[Face], list[Edge]]:
    """Analytic faces and shared edges for ``spec``.

    The footprint is centered on the origin with the main ridge along x.
    """
    spec.validate()
    w, d = spec.width / 2, spec.depth / 2
    he, hr = spec.eave_height, spec.ridge_height
    fam = spec.family

    if fam in (RoofFamily.GABLE, RoofFamily.SALTBOX):
        y0 = 0.0 if fam is RoofFamily.GABLE else -d + spec.ratios[0] * spec.depth
        front = _face([[(-w, -d), (w, -d), (w, y0), (-w, y0)]], (0, -d, he), (1, -d, he), (0, y0, hr))
        back = _face([[(-w, y0), (w, y0), (w, d), (-w, d)]], (0, d, he), (1, d, he), (0, y0, hr))
        return [front, back], [_edge(0, 1, (-w, y0, hr), (w, y0, hr))]

    if fam is RoofFamily.HIP:
        a = spec.ratios[0] * w
        faces = [
            _face([[(-w, -d), (w, -d), (w - a, 0), (-w + a, 0)]], (0, -d, he), (1, -d, he), (0, 0, hr)),
            _face([[(w, -d), (w, d), (w - a, 0)]], (w, 0, he), (w, 1, he), (w - a, 0, hr)),
            _face([[(w, d), (-w, d), (-w + a, 0), (w - a, 0)]], (0, d, he), (1, d, he), (0, 0, hr)),
            _face([[(-w, d), (-w, -d), (-w + a, 0)]], (-w, 0, he), (-w, 1, he), (-w + a, 0, hr)),
        ]
        edges = [
            _edge(0, 2, (-w + a, 0, hr), (w - a, 0, hr)),
            _edge(0, 1, (w, -d, he), (w - a, 0, hr)),
            _edge(1, 2, (w, d, he), (w - a, 0, hr)),
            _edge(2, 3, (-w, d, he), (-w + a, 0, hr)),
            _edge(3, 0, (-w, -d, he), (-w + a, 0, hr)),
        ]
        return faces, edges

    if fam is RoofFamily.PYRAMID:
        corners = [(-w, -d), (w, -d), (w, d), (-w, d)]
        apex = (0.0, 0.0, hr)
        faces, edges = [], []
        for i in range(4):
            c0, c1 = corners[i], corners[(i + 1) % 4]
            faces.append(_face([[c0, c1, (0, 0)]], (*c0, he), (*c1, he), apex))
            edges.append(_edge(i, (i + 1) % 4, (*c1, he), apex))
        return faces, edges

    if fam is RoofFamily.MANSARD:
        run, rise = spec.ratios
        yb = d * (1 - run)
        hb = he + rise * (hr - he)
        faces = [
            _face([[(-w, -d), (w, -d), (w, -yb), (-w, -yb)]], (0, -d, he), (1, -d, he), (0, -yb, hb)),
            _face([[(-w, -yb), (w, -yb), (w, 0), (-w, 0)]], (0, -yb, hb), (1, -yb, hb), (0, 0, hr)),
            _face([[(-w, 0), (w, 0), (w, yb), (-w, yb)]], (0, yb, hb), (1, yb, hb), (0, 0, hr)),
            _face([[(-w, yb), (w, yb), (w, d), (-w, d)]], (0, d, he), (1, d, he), (0, yb, hb)),
        ]
        edges = [
            _edge(0, 1, (-w, -yb, hb), (w, -yb, hb)),
            _edge(1, 2, (-w, 0, hr), (w, 0, hr)),
            _edge(2, 3, (-w, yb, hb), (w, yb, hb)),
        ]
        return faces, edges

    if fam is RoofFamily.CROSS_GABLE:
        # main gable plus two lower gabled wings, front wing at x=-w/2 and
        # back wing at x=+w/2, each meeting the main roof in two valleys
        width_r, rise_r, length_r = spec.ratios
        a = width_r * w / 2
        hc = he + rise_r * (hr - he)
        length = length_r * spec.depth
        xf, xb = -w / 2, w / 2
        yv = -d + rise_r * d  # where the front wing ridge meets the main roof
        main_f = _face(
            [
                [(-w, -d), (xf - a, -d), (xf, yv), (xf, 0), (-w, 0)],
                [(xf, yv), (xf + a, -d), (w, -d), (w, 0), (xf, 0)],
            ],
            (0, -d, he), (1, -d, he), (0, 0, hr),
        )
        main_b = _face(
            [
                [(-w, 0), (xb, 0), (xb, -yv), (xb - a, d), (-w, d)],
                [(xb, 0), (w, 0), (w, d), (xb + a, d), (xb, -yv)],
            ],
            (0, d, he), (1, d, he), (0, 0, hr),
        )
        yf = -d - length
        wing_fl = _face([[(xf - a, yf), (xf, yf), (xf, yv), (xf - a, -d)]], (xf - a, yf, he), (xf - a, 0, he), (xf, 0, hc))
        wing_fr = _face([[(xf, yf), (xf + a, yf), (xf + a, -d), (xf, yv)]], (xf + a, yf, he), (xf + a, 0, he), (xf, 0, hc))
        yk = d + length
        wing_bl = _face([[(xb - a, d), (xb, -yv), (xb, yk), (xb - a, yk)]], (xb - a, yk, he), (xb - a, 0, he), (xb, 0, hc))
        wing_br = _face([[(xb, -yv), (xb + a, d), (xb + a, yk), (xb, yk)]], (xb + a, yk, he), (xb + a, 0, he), (xb, 0, hc))
        faces = [main_f, main_b, wing_fl, wing_fr, wing_bl, wing_br]
        edges = [
            _edge(0, 1, (-w, 0, hr), (w, 0, hr)),
            _edge(2, 3, (xf, yf, hc), (xf, yv, hc)),
            _edge(0, 2, (xf - a, -d, he), (xf, yv, hc)),
            _edge(0, 3, (xf + a, -d, he), (xf, yv, hc)),
            _edge(4, 5, (xb, yk, hc), (xb, -yv, hc)),
            _edge(1, 4, (xb - a, d, he), (xb, -yv, hc)),
            _edge(1, 5, (xb + a, d, he), (xb, -yv, hc)),
        ]
        return faces, edges

    raise InvalidSpec(f"unknown family {fam!r}")


def _triangles(face: Face):
    for poly in face.pieces:
        for i in range(1, len(poly) - 1):
            yield poly[0], poly[i], poly[i + 1]


def _tri_area(a, b, c) -> float:
    return 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))


def face_areas(faces: list[Face]) -> np.ndarray:
    """True surface area of each face."""
    return np.array([sum(_tri_area(*t) for t in _triangles(f)) * f.slope_factor for f in faces])


def default_noise_sigma(spec: RoofSpec) -> float:
    return 0.01 * spec.diagonal


def generate_building(spec: RoofSpec, n_points: int = 2048, noise_sigma: float | None = None) -> PointCloud:
    """Sample ``spec`` uniformly by area, then add isotropic Gaussian noise.

    Points are shuffled so instance ids are not contiguous.  ``face_planes``
    are the exact analytic planes.  Identical inputs give bit-identical output.
    """
    faces, _ = roof_geometry(spec)
    if noise_sigma is None:
        noise_sigma = default_noise_sigma(spec)
    if noise_sigma < 0:
        raise InvalidSpec("noise_sigma must be >= 0")
    if n_points < 4 * len(faces):
        raise InvalidSpec(f"n_points must be >= {4 * len(faces)} for {len(faces)} faces")
    rng = np.random.default_rng(spec.seed)

    tris, owner, areas = [], [], []
    for fi, face in enumerate(faces):
        for t in _triangles(face):
            tris.append(t)
            owner.append(fi)
            areas.append(_tri_area(*t) * face.slope_factor)
    tris = np.asarray(tris)  # (T, 3, 2)
    owner = np.asarray(owner)
    areas = np.asarray(areas)
    counts = rng.multinomial(n_points, areas / areas.sum())

    tri_idx = np.repeat(np.arange(len(tris)), counts)
    u = rng.random(n_points)
    v = rng.random(n_points)
    flip = u + v > 1
    u[flip], v[flip] = 1 - u[flip], 1 - v[flip]
    t = tris[tri_idx]
    xy = t[:, 0] + u[:, None] * (t[:, 1] - t[:, 0]) + v[:, None] * (t[:, 2] - t[:, 0])
    inst = owner[tri_idx]
    coeffs = np.array([faces[i].coeffs for i in range(len(faces))])[inst]
    z = coeffs[:, 0] * xy[:, 0] + coeffs[:, 1] * xy[:, 1] + coeffs[:, 2]
    pts = np.column_stack([xy, z])
    if noise_sigma > 0:
        pts = pts + rng.normal(0.0, noise_sigma, size=pts.shape)

    perm = rng.permutation(n_points)
    gt = GroundTruth(inst[perm].astype(np.int64), [f.plane for f in faces])
    return PointCloud(pts[perm], gt)


def add_nonroof_clutter(cloud: PointCloud, fraction: float, seed: int, ground_z: float | None = None) -> PointCloud:
    """Append ``floor(fraction * N)`` points labeled -1.

    Half are uniform in the roof bounding box between ``ground_z`` and the
    lowest roof point (facade / vegetation stand-in), the rest uniform in the
    bounding box inflated by 20 % per side (outliers).
    """
    if not 0 <= fraction < 1:
        raise ValueError("fraction must lie in [0, 1)")
    if cloud.gt is None:
        raise ValueError("clutter needs a cloud with ground truth")
    m = int(math.floor(fraction * len(cloud)))
    if m == 0:
        return cloud
    rng = np.random.default_rng(seed)
    lo, hi = cloud.points.min(axis=0), cloud.points.max(axis=0)
    ext = hi - lo
    if ground_z is None:
        ground_z = lo[2] - max(ext[2], 1e-9)
    n_low = m // 2
    low = rng.uniform([lo[0], lo[1], ground_z], [hi[0], hi[1], lo[2]], size=(n_low, 3))
    pad = 0.2 * ext
    out = rng.uniform(lo - pad, hi + pad, size=(m - n_low, 3))
    pts = np.vstack([cloud.points, low, out])
    inst = np.concatenate([cloud.gt.instance_id, np.full(m, -1, dtype=np.int64)])
    return replace(cloud, points=pts, gt=GroundTruth(inst, list(cloud.gt.face_planes)))


def _transform_plane(plane: PlaneModel, centroid, scale) -> PlaneModel:
    # plane in coordinates q' where q = q' * scale + centroid
    return PlaneModel(plane.normal, float((plane.offset + plane.normal @ centroid) / scale), plane.rms_residual / scale)


def normalize(cloud: PointCloud) -> PointCloud:
    """Center on the centroid and scale to unit max radius.

    The stored ``centroid``/``scale`` compose with any earlier
    normalization, so :func:`denormalize` always returns the original frame.
    """
    pts = cloud.points
    c = pts.mean(axis=0)
    r = float(np.sqrt(((pts - c) ** 2).sum(axis=1).max()))
    if r == 0:
        r = 1.0
    new = (pts - c) / r
    gt = None
    if cloud.gt is not None:
        gt = GroundTruth(cloud.gt.instance_id.copy(), [_transform_plane(p, c, r) for p in cloud.gt.face_planes])
    return PointCloud(new, gt, cloud.centroid + c * cloud.scale, cloud.scale * r)


def denormalize(cloud: PointCloud) -> PointCloud:
    pts = cloud.points * cloud.scale + cloud.centroid
    gt = None
    if cloud.gt is not None:
        inv_c = -cloud.centroid / cloud.scale
        gt = GroundTruth(
            cloud.gt.instance_id.copy(),
            [_transform_plane(p, inv_c, 1.0 / cloud.scale) for p in cloud.gt.face_planes],
        )
    return PointCloud(pts, gt)


# ranges used when drawing random buildings for datasets
_DIM_RANGES = {
    "width": (8.0, 14.0),
    "depth": (6.0, 10.0),
    "eave_height": (2.5, 4.0),
    "rise": (1.5, 4.0),
}
_RATIO_RANGES = {
    RoofFamily.SALTBOX: ((0.25, 0.4),),
    RoofFamily.HIP: ((0.3, 0.55),),
    RoofFamily.MANSARD: ((0.25, 0.4), (0.6, 0.8)),
    RoofFamily.CROSS_GABLE: ((0.75, 0.95), (0.55, 0.8), (0.4, 0.6)),
}


def random_spec(family: RoofFamily | str, seed: int) -> RoofSpec:
    """Draw building dimensions for ``family`` deterministically from ``seed``.

    The ranges keep every face large enough to hold well over 100 of 2048
    points.
    """
    family = RoofFamily(family)
    rng = np.random.default_rng(seed)
    width = rng.uniform(*_DIM_RANGES["width"])
    depth = rng.uniform(*_DIM_RANGES["depth"])
    if family is RoofFamily.PYRAMID:
        depth = width * rng.uniform(0.85, 1.0)
    eave = rng.uniform(*_DIM_RANGES["eave_height"])
    rise = rng.uniform(*_DIM_RANGES["rise"])
    ratios = tuple(float(rng.uniform(lo, hi)) for lo, hi in _RATIO_RANGES.get(family, ()))
    return RoofSpec(family, float(width), float(depth), float(eave + rise), float(eave), ratios, seed=int(rng.integers(2**63)))
