"""Shared oracles and fixtures.

The oracles here are deliberately naive (linear scans, SVD, union-find) and
share no code with the library paths they check.
"""

from __future__ import annotations

import numpy as np
import pytest

from roofseg.synthgen import RoofFamily, generate_building, normalize, random_spec

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def brute_knn(points, query, k, exclude=None):
    """Linear scan; ties broken by ascending index."""
    pts = np.asarray(points, dtype=float)
    d2 = ((pts - np.asarray(query, dtype=float)) ** 2).sum(axis=1)
    order = [i for i in np.lexsort((np.arange(len(pts)), d2)) if i != exclude]
    return order[:k]


def svd_plane(points):
    """(unit normal, offset, rms) from an SVD of the centered points."""
    pts = np.asarray(points, dtype=float)
    c = pts.mean(axis=0)
    _, s, vt = np.linalg.svd(pts - c)
    n = vt[-1]
    return n, -float(n @ c), float(s[-1] / np.sqrt(len(pts)))


class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def union_find_components(shifted, embeddings, r, w1, w2, min_size):
    """Connected components of the joint-threshold graph, size > min_size."""
    p = np.asarray(shifted, dtype=float)
    f = np.asarray(embeddings, dtype=float)
    n = len(p)
    uf = UnionFind(n)
    for i in range(n):
        de = np.sqrt(((p[i + 1 :] - p[i]) ** 2).sum(axis=1))
        df = np.sqrt(((f[i + 1 :] - f[i]) ** 2).sum(axis=1))
        for j in np.flatnonzero(w1 * de + w2 * df < r):
            uf.union(i, i + 1 + int(j))
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)
    return {frozenset(g) for g in groups.values() if len(g) > min_size}


def make_cloud(family, seed, n_points=2048, noise_sigma=0.0):
    return normalize(generate_building(random_spec(RoofFamily(family), seed), n_points, noise_sigma))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
