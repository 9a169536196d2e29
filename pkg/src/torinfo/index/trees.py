from __future__ import annotations

import numpy as np

from . import _kernels as K
from .base import SearchIndex


class KdArrays:
    """Flat storage of one median-split KD tree.

    ``points[pos]`` are tree-frame coordinates in pre-order, ``src[pos]`` the
    row of the indexed cloud each slot came from, ``axis[pos]`` the split axis
    and ``left_size[pos]`` the size of the left (<= split) subtree.
    """

    __slots__ = ("points", "src", "axis", "left_size", "depth")

    def __init__(self, coords: np.ndarray, source: np.ndarray | None = None):
        coords = np.ascontiguousarray(coords, dtype=np.float64)
        n, d = coords.shape
        if source is None:
            source = np.arange(n, dtype=np.int64)
        self.points = np.empty((n, d))
        self.src = np.empty(n, dtype=np.int64)
        self.axis = np.empty(n, dtype=np.int64)
        self.left_size = np.empty(n, dtype=np.int64)
        work = np.empty(n)
        self.depth = int(K.kd_build(coords, np.ascontiguousarray(source, dtype=np.int64),
                                    self.points, self.src, self.axis,
                                    self.left_size, work))

    @property
    def nbytes(self):
        return (self.points.nbytes + self.src.nbytes + self.axis.nbytes
                + self.left_size.nbytes)

    def knn(self, queries, X, periods, k, slack, dedup, out):
        K.kd_knn(self.points, self.src, self.axis, self.left_size, queries, X,
                 periods, k, slack, dedup, self.depth, out)

    def count(self, queries, X, periods, eps, slack, dedup, out):
        K.kd_count(self.points, self.src, self.axis, self.left_size, queries,
                   X, periods, eps, slack, dedup, self.depth, out)

    def _stacks(self):
        cap = 2 * self.depth + 8
        return (np.empty(cap, dtype=np.int64), np.empty(cap, dtype=np.int64),
                np.empty(cap))

    def knn_one(self, qc, X, periods, i, k, slack, dedup):
        stamp = np.full(X.shape[0] if dedup else 1, -1, dtype=np.int64)
        return K.kd_knn_one(self.points, self.src, self.axis, self.left_size,
                            np.ascontiguousarray(qc), X, periods, i, k, slack,
                            dedup, stamp, 0, np.empty(k), *self._stacks())

    def count_one(self, qc, X, periods, i, eps, slack, dedup):
        stamp = np.full(X.shape[0] if dedup else 1, -1, dtype=np.int64)
        return K.kd_count_one(self.points, self.src, self.axis, self.left_size,
                              np.ascontiguousarray(qc), X, periods, i, eps,
                              slack, dedup, stamp, 0, *self._stacks())


class KDTreeIndex(SearchIndex):
    """Plain KD tree. Treats every axis as aperiodic."""

    backend = "kd"
    periodic = False

    def _build(self, cloud):
        self.tree = KdArrays(cloud.data)
        self._flat = np.zeros(cloud.dims)
        self._eps_slack = self._slack(cloud.data)

    @property
    def periods(self):
        return self._flat

    def _knn(self, k, out):
        X = self.cloud.data
        self.tree.knn(X, X, self._flat, k, self._eps_slack, False, out)

    def _count(self, eps, out):
        X = self.cloud.data
        self.tree.count(X, X, self._flat, eps, self._eps_slack, False, out)

    def _knn_one(self, i, k):
        X = self.cloud.data
        return self.tree.knn_one(X[i], X, self._flat, i, k, self._eps_slack, False)

    def _count_one(self, i, eps):
        X = self.cloud.data
        return self.tree.count_one(X[i], X, self._flat, i, eps, self._eps_slack, False)

    @property
    def nbytes(self):
        return self.tree.nbytes


class VPTreeIndex(SearchIndex):
    """Vantage-point tree under the cloud's own (wrapped) max-norm.

    Vantage points are drawn uniformly at random within each subset from a
    seeded generator; the threshold is the lower median of distances to the
    vantage point and the near side holds the points strictly closer than it.
    Nodes are stored contiguously in pre-order, one point per node.
    """

    backend = "vp"

    def __init__(self, seed: int = 0):
        super().__init__()
        self.seed = seed

    def _build(self, cloud):
        n, d = cloud.data.shape
        u = np.random.default_rng(self.seed).random(n)
        self.points = np.empty((n, d))
        self.src = np.empty(n, dtype=np.int64)
        self.threshold = np.empty(n)
        self.near_size = np.empty(n, dtype=np.int64)
        self.far_max = np.empty(n)
        work = np.empty(n)
        self.depth = int(K.vp_build(cloud.data, self.periods, u, self.points,
                                    self.src, self.threshold, self.near_size,
                                    self.far_max, work))
        self._eps_slack = self._slack(cloud.data)

    def _args(self):
        return (self.points, self.src, self.threshold, self.near_size,
                self.far_max, self.periods, self.cloud.data)

    def _knn(self, k, out):
        K.vp_knn(*self._args(), k, self._eps_slack, self.depth, out)

    def _count(self, eps, out):
        K.vp_count(*self._args(), eps, self._eps_slack, self.depth, out)

    def _stacks(self):
        cap = 2 * self.depth + 8
        return (np.empty(cap, dtype=np.int64), np.empty(cap, dtype=np.int64),
                np.empty(cap))

    def _knn_one(self, i, k):
        return K.vp_knn_one(*self._args(), i, k, self._eps_slack, np.empty(k),
                            *self._stacks())

    def _count_one(self, i, eps):
        lo, hi, _ = self._stacks()
        return K.vp_count_one(*self._args(), i, eps, self._eps_slack, lo, hi)

    def check_invariants(self):
        """Verify near/far placement and coverage of the built tree."""
        self._check_fitted()
        n = self.points.shape[0]
        if sorted(self.src.tolist()) != list(range(n)):
            raise AssertionError("tree does not hold each point exactly once")
        periods = self.periods
        stack = [(0, n)]
        while stack:
            lo, hi = stack.pop()
            if hi - lo <= 1:
                continue
            mid = lo + 1 + self.near_size[lo]
            for pos in range(lo + 1, hi):
                d = K.dist(self.points, lo, self.points, pos, periods)
                if pos < mid and not d < self.threshold[lo]:
                    raise AssertionError(f"near point at {pos} not below threshold")
                if pos >= mid and d < self.threshold[lo]:
                    raise AssertionError(f"far point at {pos} below threshold")
            if mid > lo + 1:
                stack.append((lo + 1, mid))
            if hi > mid:
                stack.append((mid, hi))
        return True

    @property
    def nbytes(self):
        return (self.points.nbytes + self.src.nbytes + self.threshold.nbytes
                + self.near_size.nbytes + self.far_max.nbytes)


def build_vp_tree(cloud, seed: int = 0) -> VPTreeIndex:
    return VPTreeIndex(seed=seed).fit(cloud)


def build_kd_tree(cloud) -> KDTreeIndex:
    return KDTreeIndex().fit(cloud)


def vp_knn_distance(tree: VPTreeIndex, query_index: int, k: int) -> float:
    return tree.knn_distance(query_index, k)


def vp_range_count(tree: VPTreeIndex, query_index: int, epsilon: float) -> int:
    return tree.range_count(query_index, epsilon)
