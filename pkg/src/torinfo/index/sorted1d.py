from typing import Optional

import numpy as np

from . import _kernels as K
from .base import SearchIndex


def sorted_1d_range_count(sorted_axis, center: float, epsilon: float,
                          period: Optional[float] = None,
                          check: bool = False) -> int:
    """Strict count of ``sorted_axis`` values within ``epsilon`` of ``center``.

    If ``center`` occurs in the array, one occurrence (the query itself) is
    excluded. With a period the window may wrap past 0, which is handled by
    searching both tails.
    """
    vs = np.ascontiguousarray(sorted_axis, dtype=np.float64)
    if check and vs.size > 1 and np.any(np.diff(vs) < 0):
        raise ValueError("sorted_axis is not sorted ascending")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if not epsilon > 0:
        return 0
    center = float(center)
    count = int(K.sorted_count_one(vs, 0.0 if period is None else float(period),
                                   center, float(epsilon)))
    pos = np.searchsorted(vs, center)
    if not (pos < vs.size and vs[pos] == center):
        count += 1  # the kernel assumes the query is one of the values
    return count


class Sorted1DIndex(SearchIndex):
    """Binary-search range counts on a single (possibly periodic) axis."""

    backend = "sorted1d"

    def _build(self, cloud):
        if cloud.dims != 1:
            raise ValueError("Sorted1DIndex needs a one-dimensional cloud")
        self._sorted = np.sort(cloud.data[:, 0])
        self._period = float(self.periods[0])

    def _count(self, eps, out):
        K.sorted_count(self._sorted, self._period, self.cloud.data[:, 0].copy(),
                       eps, out)

    def _count_one(self, i, eps):
        return K.sorted_count_one(self._sorted, self._period,
                                  self.cloud.data[i, 0], eps)

    def _knn(self, k, out):
        K.naive_knn(self.cloud.data, self.periods, k, out)

    def _knn_one(self, i, k):
        return K.naive_knn_one(self.cloud.data, self.periods, i, k, np.empty(1))

    @property
    def nbytes(self):
        return self._sorted.nbytes
