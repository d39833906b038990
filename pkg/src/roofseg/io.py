"""Plain-text interchange formats: clouds, predictions, segmentations, manifests.

All writers go through :func:`atomic_write` so an interrupted run never
leaves a truncated file behind.  Floats are written with ``repr``, which is
the shortest string that round-trips.
"""

from __future__ import annotations

import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .cluster import Segmentation
from .errors import FormatError, LengthMismatch
from .features import PredictionSet
from .synthgen import GroundTruth, PointCloud

_HEADER = re.compile(r"^(\w+) v1((?: \w+=\S+)*)( labeled)?$")


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _fmt(x: float) -> str:
    return repr(float(x))


def _records(path):
    """Yield (line_no, fields) for non-comment, non-blank lines."""
    with open(path, encoding="ascii") as fh:
        for no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            yield no, line.split()


def _parse_header(path, kind: str, records) -> tuple[dict, bool, int]:
    try:
        no, fields = next(records)
    except StopIteration:
        raise FormatError(f"empty file, expected '{kind} v1' header", path) from None
    m = _HEADER.match(" ".join(fields))
    if not m or m.group(1) != kind:
        raise FormatError(f"bad header {' '.join(fields)!r}, expected '{kind} v1 ...'", path, no)
    params = {}
    for item in m.group(2).split():
        key, _, value = item.partition("=")
        try:
            params[key] = int(value)
        except ValueError:
            raise FormatError(f"header field {key} must be an integer", path, no) from None
    return params, bool(m.group(3)), no


def _require(path, params, keys, line):
    for k in keys:
        if k not in params:
            raise FormatError(f"header lacks {k}=", path, line)
        if params[k] < 0:
            raise FormatError(f"header {k} must be >= 0", path, line)


def _read_rows(path, records, n: int, width: int, what: str):
    rows = []
    for no, fields in records:
        if len(rows) == n:
            raise FormatError(f"extra record after the {n} declared {what} records", path, no)
        if len(fields) != width:
            raise FormatError(f"{what} record {len(rows) + 1} has {len(fields)} fields, expected {width}", path, no)
        rows.append((no, fields))
    if len(rows) < n:
        raise FormatError(f"truncated: {what} record {len(rows) + 1} of {n} is missing", path)
    return rows


def _float(path, no, text):
    try:
        v = float(text)
    except ValueError:
        raise FormatError(f"not a number: {text!r}", path, no) from None
    if not np.isfinite(v):
        raise FormatError(f"non-finite value {text!r}", path, no)
    return v


def _int(path, no, text):
    try:
        return int(text)
    except ValueError:
        raise FormatError(f"not an integer: {text!r}", path, no) from None


# -- clouds -----------------------------------------------------------------


def write_cloud(path, cloud: PointCloud, semantic=None) -> None:
    """Write ``cloud``; with ground truth, rows carry ``instance_id semantic``.

    ``semantic`` defaults to Plane for roof points and NonRoof otherwise.
    """
    n = len(cloud)
    labeled = cloud.gt is not None
    lines = [f"pointcloud v1 N={n}" + (" labeled" if labeled else "")]
    if labeled:
        inst = cloud.gt.instance_id
        if semantic is None:
            semantic = np.where(inst >= 0, 2, 0)
        for p, i, s in zip(cloud.points, inst, semantic):
            lines.append(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])} {int(i)} {int(s)}")
    else:
        for p in cloud.points:
            lines.append(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}")
    atomic_write(path, "\n".join(lines) + "\n")


def read_cloud(path) -> tuple[PointCloud, np.ndarray | None]:
    """Return the cloud and, for labeled files, the per-point semantic class."""
    records = _records(path)
    params, labeled, hno = _parse_header(path, "pointcloud", records)
    _require(path, params, ["N"], hno)
    n = params["N"]
    rows = _read_rows(path, records, n, 5 if labeled else 3, "point")
    pts = np.empty((n, 3))
    inst = np.empty(n, dtype=np.int64)
    sem = np.empty(n, dtype=np.int64)
    for r, (no, fields) in enumerate(rows):
        pts[r] = [_float(path, no, t) for t in fields[:3]]
        if labeled:
            inst[r] = _int(path, no, fields[3])
            sem[r] = _int(path, no, fields[4])
            if inst[r] < -1:
                raise FormatError(f"instance id {inst[r]} < -1", path, no)
            if sem[r] not in (0, 1, 2):
                raise FormatError(f"semantic {sem[r]} not in {{0, 1, 2}}", path, no)
    if not labeled:
        return PointCloud(pts), None
    return PointCloud(pts, GroundTruth(inst)), sem


# -- predictions --------------------------------------------------------------


def save_predictions(pred: PredictionSet, path) -> None:
    n, d = len(pred), pred.embed_dim
    lines = [f"predictions v1 N={n} D={d}"]
    for s, o, f in zip(pred.semantic, pred.offset, pred.embedding):
        lines.append(" ".join([str(int(s)), *map(_fmt, o), *map(_fmt, f)]))
    atomic_write(path, "\n".join(lines) + "\n")


def load_predictions(path, n_points: int | None = None) -> PredictionSet:
    """Parse a prediction file; ``n_points`` checks it against its cloud."""
    records = _records(path)
    params, _, hno = _parse_header(path, "predictions", records)
    _require(path, params, ["N", "D"], hno)
    n, d = params["N"], params["D"]
    if d < 1:
        raise FormatError("D must be >= 1", path, hno)
    if n_points is not None and n != n_points:
        raise LengthMismatch(f"{path}: {n} predictions for a cloud of {n_points} points")
    rows = _read_rows(path, records, n, 4 + d, "prediction")
    sem = np.empty(n, dtype=np.int64)
    vals = np.empty((n, 3 + d))
    for r, (no, fields) in enumerate(rows):
        sem[r] = _int(path, no, fields[0])
        if sem[r] not in (0, 1, 2):
            raise FormatError(f"semantic {sem[r]} not in {{0, 1, 2}}", path, no)
        vals[r] = [_float(path, no, t) for t in fields[1:]]
    return PredictionSet(sem, vals[:, :3], vals[:, 3:])


# -- segmentations ------------------------------------------------------------


def write_segmentation(path, labels) -> None:
    labels = np.asarray(labels, dtype=np.int64)
    m = len(np.unique(labels[labels >= 0]))
    lines = [f"segmentation v1 N={len(labels)} M={m}", *map(str, labels.tolist())]
    atomic_write(path, "\n".join(lines) + "\n")


def read_segmentation(path) -> np.ndarray:
    records = _records(path)
    params, _, hno = _parse_header(path, "segmentation", records)
    _require(path, params, ["N", "M"], hno)
    rows = _read_rows(path, records, params["N"], 1, "segmentation")
    labels = np.array([_int(path, no, f[0]) for no, f in rows], dtype=np.int64)
    if len(labels) and labels.min() < -1:
        raise FormatError("instance ids must be >= -1", path)
    m = len(np.unique(labels[labels >= 0]))
    if m != params["M"]:
        raise FormatError(f"header declares M={params['M']} but {m} instances are present", path, hno)
    return labels


def segmentation_labels(seg: Segmentation, n: int) -> np.ndarray:
    return seg.labels(n)


# -- manifests ----------------------------------------------------------------


def write_manifest(path, entries) -> None:
    """``entries``: iterable of (building_id, relative_path, split)."""
    lines = [f"{bid} {rel} {split}" for bid, rel, split in entries]
    atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))


def read_manifest(path) -> list[tuple[str, str, str]]:
    out = []
    for no, fields in _records(path):
        if len(fields) != 3 or fields[2] not in ("train", "test"):
            raise FormatError("manifest lines are '<building_id> <relative_path> <train|test>'", path, no)
        out.append(tuple(fields))
    return out
