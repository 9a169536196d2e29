"""Periodic search built from aperiodic KD trees.

Two strategies: a single half-period-shifted copy queried only when the
original tree's answer may have crossed a wall (falling back to a full scan
when both frames are unsafe), and a 2^d-fold duplication of points into the
adjacent regions so that one tree always holds every minimum image.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import _kernels as K
from .base import SearchIndex
from .naive import NaiveIndex
from .trees import KdArrays


def shift_half_period(data: np.ndarray, periods: np.ndarray) -> np.ndarray:
    """Shift every periodic axis by half its period, re-wrapped."""
    out = np.array(data, dtype=np.float64, copy=True)
    for a, p in enumerate(periods):
        if p > 0:
            col = np.mod(out[:, a] + 0.5 * p, p)
            out[:, a] = np.where(col >= p, 0.0, col)
    return out


class HybridIndex(SearchIndex):
    """Original KD tree, half-shifted image KD tree, then naive fallback.

    ``tier_tally`` accumulates how many queries each tier answered since the
    index was built (``[original, shifted, naive]``); ``last_tiers`` holds
    the per-row tier of the most recent batched query.
    """

    backend = "hybrid"

    def _build(self, cloud):
        periods = self.periods
        self.primary = KdArrays(cloud.data)
        self.shifted = shift_half_period(cloud.data, periods)
        self.image = KdArrays(self.shifted)
        self._eps_slack = self._slack(cloud.data)
        self.tier_tally = np.zeros(3, dtype=np.int64)
        self.last_tiers = None

    def _trees(self):
        p, q = self.primary, self.image
        return (p.points, p.src, p.axis, p.left_size, p.depth,
                q.points, q.src, q.axis, q.left_size, q.depth,
                self.shifted, self.cloud.data, self.periods)

    def _knn(self, k, out):
        tiers = np.empty(self.cloud.n, dtype=np.int8)
        K.hybrid_knn(*self._trees(), k, self._eps_slack, out, tiers,
                     self.tier_tally)
        self.last_tiers = tiers

    def _count(self, eps, out):
        tiers = np.empty(self.cloud.n, dtype=np.int8)
        K.hybrid_count(*self._trees(), eps, self._eps_slack, out, tiers,
                       self.tier_tally)
        self.last_tiers = tiers

    def tier_of_knn(self, i: int, k: int) -> int:
        """Which tier would answer a kNN query for row ``i``."""
        X = self.cloud.data
        periods = self.periods
        s = self._eps_slack
        tau = self.primary.knn_one(X[i], X, periods, i, k, s, False)
        if K.wall_distance(X, i, periods) >= tau + s:
            return 1
        tau = self.image.knn_one(self.shifted[i], X, periods, i, k, s, False)
        if K.wall_distance(self.shifted, i, periods) >= tau + s:
            return 2
        return 3

    def _knn_one(self, i, k):
        X = self.cloud.data
        periods = self.periods
        s = self._eps_slack
        tau = self.primary.knn_one(X[i], X, periods, i, k, s, False)
        if K.wall_distance(X, i, periods) >= tau + s:
            return tau
        tau = self.image.knn_one(self.shifted[i], X, periods, i, k, s, False)
        if K.wall_distance(self.shifted, i, periods) >= tau + s:
            return tau
        return K.naive_knn_one(X, periods, i, k, np.empty(1))

    def _count_one(self, i, eps):
        X = self.cloud.data
        periods = self.periods
        s = self._eps_slack
        if K.wall_distance(X, i, periods) >= eps + s:
            return self.primary.count_one(X[i], X, periods, i, eps, s, False)
        if K.wall_distance(self.shifted, i, periods) >= eps + s:
            return self.image.count_one(self.shifted[i], X, periods, i, eps, s,
                                        False)
        return K.naive_count_one(X, periods, i, eps)

    @property
    def nbytes(self):
        return self.primary.nbytes + self.image.nbytes + self.shifted.nbytes


def image_copies(data: np.ndarray, periods: np.ndarray):
    """The original points plus one copy per non-empty subset of axes.

    Each copy moves the point by one period towards the far side of the
    axis: up when the coordinate is below half the period, down otherwise.
    Returns ``(coords, source_rows)`` with ``N * 2**d`` rows.
    """
    n, d = data.shape
    step = np.where(data < 0.5 * periods, periods, -periods)
    blocks = [data]
    for r in range(1, d + 1):
        for axes in itertools.combinations(range(d), r):
            copy = data.copy()
            for a in axes:
                copy[:, a] += step[:, a]
            blocks.append(copy)
    coords = np.vstack(blocks)
    source = np.tile(np.arange(n, dtype=np.int64), len(blocks))
    return coords, source


class ImagesIndex(SearchIndex):
    """One KD tree over the points and their nearest-region images."""

    backend = "images"

    def _build(self, cloud):
        if not cloud.space.fully_periodic:
            raise ValueError("images backend needs every axis to be periodic")
        coords, source = image_copies(cloud.data, self.periods)
        self.tree = KdArrays(coords, source)
        self.n_stored = coords.shape[0]
        self._eps_slack = self._slack(coords)

    def _knn(self, k, out):
        X = self.cloud.data
        self.tree.knn(X, X, self.periods, k, self._eps_slack, True, out)

    def _count(self, eps, out):
        X = self.cloud.data
        self.tree.count(X, X, self.periods, eps, self._eps_slack, True, out)

    def _knn_one(self, i, k):
        X = self.cloud.data
        return self.tree.knn_one(X[i], X, self.periods, i, k, self._eps_slack, True)

    def _count_one(self, i, eps):
        X = self.cloud.data
        return self.tree.count_one(X[i], X, self.periods, i, eps,
                                   self._eps_slack, True)

    @property
    def nbytes(self):
        return self.tree.nbytes


def build_images_index(cloud) -> ImagesIndex:
    return ImagesIndex().fit(cloud)


def build_hybrid_index(cloud) -> HybridIndex:
    return HybridIndex().fit(cloud)


def hybrid_knn_distance(index: HybridIndex, query_index: int, k: int) -> float:
    return index.knn_distance(query_index, k)


def hybrid_range_count(index: HybridIndex, query_index: int, epsilon: float) -> int:
    return index.range_count(query_index, epsilon)


__all__ = ["HybridIndex", "ImagesIndex", "NaiveIndex", "image_copies",
           "shift_half_period", "build_images_index", "build_hybrid_index",
           "hybrid_knn_distance", "hybrid_range_count"]
