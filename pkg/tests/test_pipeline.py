import numpy as np
import pytest

from conftest import make_cloud
from roofseg.cluster import ClusterParams
from roofseg.errors import LengthMismatch
from roofseg.features import NoiseSpec, PredictionSet, oracle_predictions
from roofseg.gtlabel import Semantic, derive_labels
from roofseg.metrics import evaluate
from roofseg.pipeline import ABLATIONS, FULL, run_variant, segment
from roofseg.synthgen import add_nonroof_clutter


def _partition_equal(seg, inst):
    return seg.as_sets() == {frozenset(np.flatnonzero(inst == i).tolist()) for i in np.unique(inst[inst >= 0])}


@pytest.mark.parametrize("family", ["gable", "hip", "crossgable"])
def test_zero_noise_recovers_gt(family):
    cloud = make_cloud(family, 7)
    labels = derive_labels(cloud)
    pred = oracle_predictions(cloud, labels)
    seg = segment(cloud, pred)
    assert _partition_equal(seg, cloud.gt.instance_id)
    assert len(seg.unassigned) == 0


def test_clutter_left_unassigned():
    cloud = add_nonroof_clutter(make_cloud("hip", 2), 0.1, 3)
    labels = derive_labels(cloud)
    seg = segment(cloud, oracle_predictions(cloud, labels))
    inst = cloud.gt.instance_id
    assert set(seg.unassigned.tolist()) == set(np.flatnonzero(inst < 0).tolist())
    assert _partition_equal(seg, inst)


def test_partition_covers_everything():
    cloud = make_cloud("mansard", 5)
    labels = derive_labels(cloud)
    pred = oracle_predictions(cloud, labels, NoiseSpec(0.1, 0.3, 0.05, seed=5))
    for variant in ABLATIONS:
        seg = run_variant(cloud.points, pred, variant)
        lab = seg.labels(len(cloud))
        assert np.array_equal(np.sort(np.flatnonzero(lab < 0)), np.sort(seg.unassigned))
        assert sum(len(c) for c in seg.clusters) + len(seg.unassigned) == len(cloud)


def test_full_variant_assigns_all_roof_points():
    cloud = make_cloud("saltbox", 1)
    labels = derive_labels(cloud)
    pred = oracle_predictions(cloud, labels, NoiseSpec(0.1, 0.3, 0.0, seed=1))
    seg = run_variant(cloud.points, pred, FULL)
    assert len(seg.unassigned) == 0
    assert evaluate(seg, cloud.gt).cov > 0.9


def test_non_boundary_aware_uses_all_roof_points():
    cloud = make_cloud("gable", 3)
    labels = derive_labels(cloud)
    pred = oracle_predictions(cloud, labels)
    seg = segment(cloud, pred, ClusterParams(), boundary_aware=False)
    # zero noise: boundary points cluster with their own face
    assert _partition_equal(seg, cloud.gt.instance_id)


def test_semantic_nonroof_dropped():
    cloud = make_cloud("gable", 3)
    labels = derive_labels(cloud)
    pred = oracle_predictions(cloud, labels)
    sem = pred.semantic.copy()
    sem[:10] = Semantic.NON_ROOF
    seg = segment(cloud, PredictionSet(sem, pred.offset, pred.embedding))
    assert set(seg.unassigned.tolist()) == set(range(10))


def test_length_mismatch():
    cloud = make_cloud("gable", 0)
    pred = oracle_predictions(cloud, derive_labels(cloud))
    with pytest.raises(LengthMismatch):
        segment(cloud.points[:-1], pred)


def test_ablation_names():
    assert [v.name for v in ABLATIONS] == ["euclidean", "embedding", "joint", "joint+boundary"]
    assert ABLATIONS[-1] is FULL and FULL.boundary_aware
