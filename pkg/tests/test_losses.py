import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roofseg.errors import LabelOutOfRange, LengthMismatch, NoInstances
from roofseg.losses import (
    REG_WEIGHT,
    LossValue,
    classification_loss,
    embedding_loss,
    offset_loss,
    total_loss,
)


def fd_grad(fn, x, h=1e-5):
    x = np.array(x, dtype=float)
    g = np.zeros(x.size)
    flat = x.reshape(-1)
    for i in range(x.size):
        old = flat[i]
        flat[i] = old + h
        up = fn(x)
        flat[i] = old - h
        down = fn(x)
        flat[i] = old
        g[i] = (up - down) / (2 * h)
    return g


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)


class TestClassification:
    def test_saturated_two_class(self):
        y = np.array([0, 1, 1, 0])
        assert classification_loss(np.eye(2)[y] * 10, y).value < 2e-4

    def test_saturated_three_class(self):
        y = np.array([0, 1, 2, 1])
        assert classification_loss(np.eye(3)[y] * 10, y).value == pytest.approx(4 * math.log1p(2 * math.exp(-10)))

    def test_uniform(self):
        assert classification_loss(np.zeros((1, 3)), [2]).value == pytest.approx(math.log(3), abs=1e-15)

    def test_gradient(self, rng):
        for _ in range(20):
            z = rng.normal(0, 3, (6, 3))
            y = rng.integers(0, 3, 6)
            g = fd_grad(lambda v: classification_loss(v, y).value, z)
            assert rel_err(classification_loss(z, y).gradient, g) <= 1e-5

    def test_monotone_in_margin(self):
        vals = [classification_loss([[m, 0.0]], [0]).value for m in range(0, 30, 3)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert all(v >= 0 for v in vals)

    def test_stable_for_large_logits(self):
        lv = classification_loss([[1000.0, -1000.0]], [1])
        assert lv.value == pytest.approx(2000.0)
        assert np.all(np.isfinite(lv.gradient))

    @pytest.mark.parametrize("labels", [[3], [-1]])
    def test_label_range(self, labels):
        with pytest.raises(LabelOutOfRange):
            classification_loss(np.zeros((1, 3)), labels)

    def test_shape_mismatch(self):
        with pytest.raises(LengthMismatch):
            classification_loss(np.zeros((2, 3)), [0])


class TestOffset:
    def test_perfect(self, rng):
        g = rng.normal(size=(5, 3))
        assert offset_loss(g, g).value == pytest.approx(0.0, abs=1e-12)

    def test_opposite_unit(self):
        # distance 2 plus (1 - cos) = 2
        assert offset_loss([[1.0, 0, 0]], [[-1.0, 0, 0]]).value == pytest.approx(4.0)

    def test_direction_term_is_one_minus_cos(self):
        # orthogonal unit vectors: sqrt(2) + 1
        assert offset_loss([[1.0, 0, 0]], [[0, 1.0, 0]]).value == pytest.approx(math.sqrt(2) + 1)

    def test_zero_norm_skips_cosine(self):
        assert offset_loss([[0.0, 0, 0]], [[3.0, 4, 0]]).value == pytest.approx(5.0)
        assert offset_loss([[3.0, 4, 0]], [[0.0, 0, 0]]).value == pytest.approx(5.0)

    def test_gradient(self, rng):
        for _ in range(20):
            p, g = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
            fd = fd_grad(lambda v: offset_loss(v, g).value, p)
            assert rel_err(offset_loss(p, g).gradient, fd) <= 1e-5

    def test_depends_only_on_vectors(self, rng):
        # the loss sees offsets, not the points they start from
        p, g = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
        assert offset_loss(p, g).value == offset_loss(p.copy(), g.copy()).value

    def test_mismatch(self):
        with pytest.raises(LengthMismatch):
            offset_loss(np.zeros((2, 3)), np.zeros((3, 3)))


class TestEmbedding:
    def test_collapsed_single_instance(self):
        f = np.tile([3.0, 4.0], (5, 1))
        lv = embedding_loss(f, np.zeros(5, dtype=int))
        assert lv.value == pytest.approx(REG_WEIGHT * 5.0)

    def test_inactive_hinges(self, rng):
        mu = np.array([[0.0, 0, 0], [5.0, 0, 0]])
        ids = np.repeat([0, 1], 6)
        f = mu[ids] + rng.uniform(-0.1, 0.1, (12, 3))
        f -= np.array([f[ids == i].mean(axis=0) - mu[i] for i in (0, 1)])[ids]
        lv = embedding_loss(f, ids, 0.5, 1.5)
        assert lv.value == pytest.approx(REG_WEIGHT * 2.5, abs=1e-12)

    def test_pull_by_hand(self):
        # one instance, points at +-1 on a line: |f - mu| = 1, hinge 0.5
        lv = embedding_loss([[1.0], [-1.0]], [0, 0], margin_pull=0.5)
        assert lv.value == pytest.approx(0.25)

    def test_push_by_hand(self):
        # two singleton instances 1 apart: hinge 2*1.5 - 1 = 2, squared = 4
        lv = embedding_loss([[0.0], [1.0]], [0, 1], margin_push=1.5)
        assert lv.value == pytest.approx(4.0 + REG_WEIGHT * 0.5)

    def test_gradient(self, rng):
        for _ in range(20):
            ids = np.concatenate([np.arange(3), rng.integers(0, 3, 7)])
            f = rng.normal(size=(10, 4))
            fd = fd_grad(lambda v: embedding_loss(v, ids).value, f)
            assert rel_err(embedding_loss(f, ids).gradient, fd) <= 1e-5

    def test_rotation_invariant(self, rng):
        ids = rng.integers(0, 3, 15)
        f = rng.normal(size=(15, 4))
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        assert embedding_loss(f @ q.T, ids).value == pytest.approx(embedding_loss(f, ids).value, abs=1e-9)

    def test_no_instances(self):
        with pytest.raises(NoInstances):
            embedding_loss(np.zeros((0, 4)), np.zeros(0, dtype=int))

    def test_bad_margins(self):
        with pytest.raises(ValueError):
            embedding_loss(np.zeros((2, 2)), [0, 1], margin_pull=0.0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_nonnegative(self, seed):
        r = np.random.default_rng(seed)
        n = int(r.integers(1, 12))
        lv = embedding_loss(r.normal(size=(n, 3)), r.integers(0, 4, n))
        assert lv.value >= 0 and np.all(np.isfinite(lv.gradient))


class TestTotal:
    def test_sum(self):
        parts = [LossValue(float(v), np.full(2, v)) for v in (1, 2, 3)]
        total = total_loss(*parts)
        assert total.value == 6.0
        np.testing.assert_array_equal(total.gradient, [1, 1, 2, 2, 3, 3])

    def test_zero(self):
        z = LossValue(0.0, np.zeros(0))
        assert total_loss(z, z, z).value == 0.0

    def test_exact(self, rng):
        a, b, c = (LossValue(float(v), np.zeros(1)) for v in rng.random(3))
        assert total_loss(a, b, c).value == a.value + b.value + c.value
