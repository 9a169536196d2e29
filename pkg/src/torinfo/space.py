"""Periodic and aperiodic geometry under the max-norm.

Every axis of a :class:`PeriodicSpace` is either aperiodic (period ``None``)
or wraps with a positive period. Distances are Chebyshev distances built from
per-axis minimum-image differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PeriodicSpace:
    """Dimension count plus an optional period per axis."""

    dims: int
    periods: tuple[Optional[float], ...]

    def __post_init__(self):
        if self.dims < 1:
            raise ValueError(f"dims must be >= 1, got {self.dims}")
        if len(self.periods) != self.dims:
            raise ValueError(
                f"expected {self.dims} periods, got {len(self.periods)}")
        for p in self.periods:
            if p is not None and not (math.isfinite(p) and p > 0):
                raise ValueError(f"periods must be positive and finite, got {p}")

    @classmethod
    def aperiodic(cls, dims: int) -> "PeriodicSpace":
        return cls(dims, (None,) * dims)

    @classmethod
    def torus(cls, dims: int, period: float = TWO_PI) -> "PeriodicSpace":
        return cls(dims, (float(period),) * dims)

    @property
    def period_array(self) -> np.ndarray:
        """Periods as a float array, 0.0 marking aperiodic axes."""
        return np.array([0.0 if p is None else p for p in self.periods],
                        dtype=np.float64)

    @property
    def is_periodic(self) -> bool:
        return any(p is not None for p in self.periods)

    @property
    def fully_periodic(self) -> bool:
        return all(p is not None for p in self.periods)

    def subspace(self, axes: Sequence[int]) -> "PeriodicSpace":
        return PeriodicSpace(len(axes), tuple(self.periods[a] for a in axes))


class PointCloud:
    """``N x dims`` realisations living in a :class:`PeriodicSpace`.

    Coordinates on periodic axes are normalised into ``[0, period)`` on
    construction. The data array is stored C-contiguous and read-only.
    """

    __slots__ = ("space", "data")

    def __init__(self, data, space: Optional[PeriodicSpace] = None):
        arr = np.array(data, dtype=np.float64, copy=True)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError(f"data must be 2-dimensional, got shape {arr.shape}")
        if space is None:
            space = PeriodicSpace.aperiodic(arr.shape[1])
        if arr.shape[1] != space.dims:
            raise ValueError(
                f"data has {arr.shape[1]} columns but space has {space.dims} dims")
        if not np.all(np.isfinite(arr)):
            raise ValueError("data contains non-finite values")
        for a, p in enumerate(space.periods):
            if p is not None:
                arr[:, a] = normalise(arr[:, a], p)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self.space = space
        self.data = arr

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> int:
        return self.space.dims

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"PointCloud(n={self.n}, periods={self.space.periods})"

    def project(self, axes: Sequence[int]) -> "PointCloud":
        return project(self, axes)

    def take(self, rows) -> "PointCloud":
        """Row subset, keeping the space."""
        return PointCloud(self.data[np.asarray(rows)], self.space)


def normalise(values, period: float):
    """Map coordinates into ``[0, period)``."""
    out = np.mod(values, period)
    # np.mod can return exactly `period` for tiny negative inputs
    return np.where(out >= period, 0.0, out)


def wrapped_diff(a: float, b: float, period: Optional[float] = None) -> float:
    """Absolute difference of two coordinates, taking the short way round.

    >>> round(wrapped_diff(0.0, 3.5, 2 * math.pi), 7)
    2.7831853
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("coordinates must be finite")
    diff = abs(a - b)
    if period is not None:
        if not period > 0:
            raise ValueError(f"period must be positive, got {period}")
        alt = period - diff
        if alt < diff:
            diff = alt
    return diff


def max_norm_dist(p, q, space: PeriodicSpace) -> float:
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape[0] != space.dims or q.shape[0] != space.dims:
        raise ValueError(
            f"points must have {space.dims} coordinates, "
            f"got {p.shape[0]} and {q.shape[0]}")
    best = 0.0
    for a, per in enumerate(space.periods):
        d = wrapped_diff(float(p[a]), float(q[a]), per)
        if d > best:
            best = d
    return best


def pairwise_diffs(values: np.ndarray, center, periods: np.ndarray) -> np.ndarray:
    """Vectorised per-axis wrapped differences of ``values`` from ``center``.

    Uses the same floating-point expression as :func:`wrapped_diff`, so the
    results agree bit for bit.
    """
    diff = np.abs(np.asarray(center) - values)
    alt = periods - diff
    return np.where((periods > 0) & (alt < diff), alt, diff)


def distances_from(cloud: PointCloud, i: int) -> np.ndarray:
    """Max-norm distance from row ``i`` to every row of ``cloud``."""
    diffs = pairwise_diffs(cloud.data, cloud.data[i], cloud.space.period_array)
    return diffs.max(axis=1)


def project(cloud: PointCloud, axes: Sequence[int]) -> PointCloud:
    """Marginal projection onto ``axes`` (order preserved, periods carried)."""
    axes = [int(a) for a in axes]
    if not axes:
        raise ValueError("axes must be non-empty")
    if len(set(axes)) != len(axes):
        raise ValueError(f"duplicate axis in {axes}")
    for a in axes:
        if not 0 <= a < cloud.dims:
            raise ValueError(f"axis {a} out of range for {cloud.dims} dims")
    if axes == list(range(cloud.dims)):
        return cloud
    out = PointCloud.__new__(PointCloud)
    data = np.ascontiguousarray(cloud.data[:, axes])
    data.setflags(write=False)
    out.space = cloud.space.subspace(axes)
    out.data = data
    return out
