import numpy as np
import pytest

from roofseg.cluster import Segmentation
from roofseg.errors import DegenerateInput, NoClusters
from roofseg.refine import assignment_cost, refine_boundaries, summarize_patch


def _two_planes(rng, n=200):
    # z = 0 on x < 0 and z = x on x > 0
    xa = rng.uniform(-1, -0.1, (n, 2))
    xb = rng.uniform(0.1, 1, (n, 2))
    a = np.column_stack([xa, np.zeros(n)])
    b = np.column_stack([xb, xb[:, 0]])
    return np.vstack([a, b])


class TestSummarize:
    def test_plane_and_center(self, rng):
        pts = _two_planes(rng)
        emb = np.repeat([[1.0, 0], [0, 1.0]], 200, axis=0)
        s = summarize_patch(np.arange(200), pts, emb)
        np.testing.assert_allclose(s.plane.normal, [0, 0, 1], atol=1e-12)
        np.testing.assert_allclose(s.embed_center, [1, 0])

    def test_degenerate(self):
        with pytest.raises(DegenerateInput):
            summarize_patch([0, 1], np.zeros((2, 3)), np.zeros((2, 2)))


class TestRefine:
    def test_assigns_to_right_plane(self, rng):
        pts = _two_planes(rng)
        emb = np.zeros((400, 2))
        seg = Segmentation([np.arange(0, 190), np.arange(200, 390)], np.r_[190:200, 390:400])
        out = refine_boundaries(seg, pts, emb)
        assert out.as_sets() == {frozenset(range(200)), frozenset(range(200, 400))}
        assert len(out.unassigned) == 0

    def test_embedding_weight_decides(self, rng):
        pts = _two_planes(rng)
        emb = np.repeat([[0.0], [10.0]], 200, axis=0)
        # a point on plane A but with plane B's embedding
        pts = np.vstack([pts, [[-0.5, 0.0, 0.0]]])
        emb = np.vstack([emb, [[10.0]]])
        seg = Segmentation([np.arange(200), np.arange(200, 400)], [400])
        geo = refine_boundaries(seg, pts, emb, weights=(1.0, 0.0)).labels(401)
        feat = refine_boundaries(seg, pts, emb, weights=(0.0, 1.0)).labels(401)
        assert geo[400] == 0 and feat[400] == 1

    def test_uses_cost_argmin(self, rng):
        pts = rng.normal(size=(300, 3))
        emb = rng.normal(size=(300, 4))
        clusters = [np.arange(0, 100), np.arange(100, 200), np.arange(200, 250)]
        seg = Segmentation(clusters, np.arange(250, 300))
        out = refine_boundaries(seg, pts, emb, (0.7, 0.3)).labels(300)
        summaries = [summarize_patch(c, pts, emb) for c in clusters]
        want = np.argmin(assignment_cost(pts[250:], emb[250:], summaries, (0.7, 0.3)), axis=1)
        np.testing.assert_array_equal(out[250:], want)
        np.testing.assert_array_equal(out[:250], np.repeat([0, 1, 2], [100, 100, 50]))

    def test_order_independent(self, rng):
        pts = rng.normal(size=(200, 3))
        emb = rng.normal(size=(200, 2))
        left = np.arange(150, 200)
        a = refine_boundaries(Segmentation([np.arange(75), np.arange(75, 150)], left), pts, emb)
        b = refine_boundaries(Segmentation([np.arange(75), np.arange(75, 150)], left[::-1]), pts, emb)
        assert a.as_sets() == b.as_sets()

    def test_nothing_to_do(self, rng):
        pts = rng.normal(size=(10, 3))
        seg = Segmentation([np.arange(10)], [])
        out = refine_boundaries(seg, pts, np.zeros((10, 1)))
        assert out.as_sets() == seg.as_sets()

    def test_degenerate_patch_dissolved(self, rng):
        pts = rng.normal(size=(50, 3))
        seg = Segmentation([np.arange(48), np.array([48, 49])], [])
        out = refine_boundaries(seg, pts, np.zeros((50, 1)))
        assert out.as_sets() == {frozenset(range(50))}

    def test_no_clusters(self):
        with pytest.raises(NoClusters):
            refine_boundaries(Segmentation([], [0, 1]), np.zeros((2, 3)), np.zeros((2, 1)))

    def test_tie_goes_to_lower_index(self):
        # two identical patches: the leftover is equidistant
        sq = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])
        pts = np.vstack([sq, sq, [[0.5, 0.5, 0]]])
        seg = Segmentation([np.arange(4), np.arange(4, 8)], [8])
        assert refine_boundaries(seg, pts, np.zeros((9, 1))).labels(9)[8] == 0
