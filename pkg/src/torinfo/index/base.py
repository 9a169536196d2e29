from __future__ import annotations

import time

import numpy as np

from ..space import PointCloud
from ..validation import check_k


class SearchIndex:
    """Common surface of every neighbour-search backend.

    A backend is built once over a :class:`PointCloud` and then answers two
    kinds of query about its own rows: the distance to the ``k``-th nearest
    other row, and the number of other rows strictly closer than ``eps``.
    Queries come in a batched form over all rows (what the estimators use)
    and a single-row form.
    """

    backend = "abstract"
    #: whether the backend honours periodic axes
    periodic = True

    def __init__(self):
        self.cloud = None
        self.build_seconds = 0.0

    def fit(self, cloud: PointCloud) -> "SearchIndex":
        if not isinstance(cloud, PointCloud):
            raise TypeError(f"expected PointCloud, got {type(cloud).__name__}")
        if cloud.n < 1:
            raise ValueError("cannot index an empty cloud")
        self.cloud = cloud
        t0 = time.perf_counter()
        self._build(cloud)
        self.build_seconds = time.perf_counter() - t0
        return self

    def _build(self, cloud):
        pass

    def _check_fitted(self):
        if self.cloud is None:
            raise RuntimeError(f"{type(self).__name__} is not fitted")

    @property
    def periods(self) -> np.ndarray:
        return self.cloud.space.period_array

    def _slack(self, coords) -> float:
        scale = 1.0
        if coords.size:
            scale = max(scale, float(np.max(np.abs(coords))))
        if self.cloud.space.is_periodic:
            scale = max(scale, float(np.max(self.periods)))
        return 1e-12 * scale

    # batched queries

    def knn_distances(self, k: int) -> np.ndarray:
        self._check_fitted()
        check_k(k, self.cloud.n)
        out = np.empty(self.cloud.n)
        self._knn(k, out)
        return out

    def range_counts(self, eps) -> np.ndarray:
        self._check_fitted()
        eps = np.ascontiguousarray(
            np.broadcast_to(np.asarray(eps, dtype=np.float64), (self.cloud.n,)))
        if np.any(eps < 0) or not np.all(np.isfinite(eps)):
            raise ValueError("eps must be finite and non-negative")
        out = np.empty(self.cloud.n, dtype=np.int64)
        self._count(eps, out)
        return out

    # single-row queries

    def knn_distance(self, i: int, k: int) -> float:
        self._check_fitted()
        check_k(k, self.cloud.n)
        self._check_row(i)
        return float(self._knn_one(int(i), k))

    def range_count(self, i: int, eps: float) -> int:
        self._check_fitted()
        self._check_row(i)
        if not (np.isfinite(eps) and eps >= 0):
            raise ValueError("eps must be finite and non-negative")
        return int(self._count_one(int(i), float(eps)))

    def _check_row(self, i):
        if not 0 <= i < self.cloud.n:
            raise IndexError(f"row {i} out of range for {self.cloud.n} points")

    @property
    def nbytes(self) -> int:
        """Bytes held by the structure itself, excluding the indexed cloud."""
        return 0
