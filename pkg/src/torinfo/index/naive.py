import numpy as np

from . import _kernels as K
from .base import SearchIndex


class NaiveIndex(SearchIndex):
    """Exhaustive scan. Quadratic, and the reference every tree is held to."""

    backend = "naive"

    def _knn(self, k, out):
        K.naive_knn(self.cloud.data, self.periods, k, out)

    def _count(self, eps, out):
        K.naive_count(self.cloud.data, self.periods, eps, out)

    def _knn_one(self, i, k):
        return K.naive_knn_one(self.cloud.data, self.periods, i, k, np.empty(1))

    def _count_one(self, i, eps):
        return K.naive_count_one(self.cloud.data, self.periods, i, eps)


def naive_knn_distance(cloud, query_index: int, k: int) -> float:
    return NaiveIndex().fit(cloud).knn_distance(query_index, k)


def naive_range_count(cloud, query_index: int, epsilon: float) -> int:
    return NaiveIndex().fit(cloud).range_count(query_index, epsilon)
