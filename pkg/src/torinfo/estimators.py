"""k-nearest-neighbour estimators of MI, TE and GTE (all in nats).

Each estimate makes one kNN pass in the joint space, storing the distance
``eps[i]`` to the k-th neighbour of every point, then one strict range-count
pass per marginal. Structures are built and discarded one after another, so
at most the cloud, the stored distances and a single index coexist.
One-dimensional marginals are always counted by binary search.
"""

from __future__ import annotations

import math
import resource
import time
import tracemalloc
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .index import BACKENDS, Sorted1DIndex, make_index
from .space import PointCloud
from .special import digamma, digamma_array
from .validation import check_k, check_roles

METRIC_ROLES = {
    "mi": ("x", "y"),
    "te": ("w", "x", "y"),
    "gte": ("w", "x", "y"),
}


@dataclass
class EstimatorSpec:
    """What to estimate and how.

    ``roles`` maps role names to cloud columns: ``x``/``y`` for MI and
    ``w`` (next target state), ``x`` (target past) and ``y`` (source past,
    or the consensus / multivariate source for GTE) for TE and GTE.
    """

    metric: str = "mi"
    k: int = 3
    roles: Optional[Dict[str, List[int]]] = None
    backend: str = "vp"
    seed: int = 0

    def __post_init__(self):
        self.metric = self.metric.lower()
        if self.metric not in METRIC_ROLES:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")

    def resolved_roles(self, dims: int) -> Dict[str, List[int]]:
        names = METRIC_ROLES[self.metric]
        roles = self.roles
        if roles is None:
            if dims < len(names):
                raise ValueError(
                    f"{self.metric} needs at least {len(names)} columns, got {dims}")
            # default layout: one column per role, the last role takes the rest
            roles = {r: [i] for i, r in enumerate(names[:-1])}
            roles[names[-1]] = list(range(len(names) - 1, dims))
        return check_roles(roles, dims, names)


@dataclass
class EstimateResult:
    value: float
    metric: str
    k: int
    n: int
    backend: str
    timings: Dict[str, float] = field(default_factory=dict)
    peak_mem_bytes: Optional[int] = None
    peak_rss_bytes: Optional[int] = None
    index_bytes: int = 0
    duplicates: int = 0

    @property
    def total_seconds(self) -> float:
        return sum(self.timings.values())

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "value", "metric", "k", "n", "backend", "peak_mem_bytes",
            "peak_rss_bytes", "index_bytes", "duplicates")}
        d["timings"] = dict(self.timings)
        return d


def _peak_rss() -> int:
    # ru_maxrss is in KiB on Linux
    return int(resource.getrusage(resource.RUSAGE_SELF).ru_maxrss) * 1024


class _Run:
    """Timing and memory bookkeeping for one estimate."""

    def __init__(self, track_memory: bool):
        self.timings = {"knn_build": 0.0, "knn_query": 0.0,
                        "fr_build": 0.0, "fr_query": 0.0}
        self.index_bytes = 0
        self.track = track_memory
        self._started = False
        if track_memory:
            if not tracemalloc.is_tracing():
                tracemalloc.start()
                self._started = True
            tracemalloc.reset_peak()
            self._base = tracemalloc.get_traced_memory()[0]

    def build(self, backend, cloud, seed, phase):
        t0 = time.perf_counter()
        if cloud.dims == 1:
            index = Sorted1DIndex().fit(cloud)
        else:
            index = make_index(backend, cloud, seed)
        self.timings[phase] += time.perf_counter() - t0
        self.index_bytes = max(self.index_bytes, index.nbytes)
        return index

    def finish(self):
        peak = None
        if self.track:
            peak = tracemalloc.get_traced_memory()[1] - self._base
            if self._started:
                tracemalloc.stop()
        return peak


def _check_cloud(cloud: PointCloud, spec: EstimatorSpec):
    if not isinstance(cloud, PointCloud):
        raise TypeError("expected a PointCloud")
    check_k(spec.k, cloud.n)
    if spec.backend == "kd" and cloud.space.is_periodic:
        raise ValueError("the kd backend ignores periodicity; use vp, hybrid, "
                         "images or naive for periodic data")
    if cloud.n > 1 and np.all(cloud.data == cloud.data[0]):
        raise ValueError("degenerate cloud: all points are identical")


def _neighbour_counts(cloud, spec, marginals, track_memory):
    """Joint kNN radii followed by strict counts in each marginal."""
    run = _Run(track_memory)
    try:
        joint_axes = sorted({a for axes in marginals.values() for a in axes})
        joint = cloud.project(joint_axes)
        index = run.build(spec.backend, joint, spec.seed, "knn_build")
        t0 = time.perf_counter()
        eps = index.knn_distances(spec.k)
        run.timings["knn_query"] += time.perf_counter() - t0
        del index
        counts = {}
        for name, axes in marginals.items():
            marg = cloud.project(axes)
            index = run.build(spec.backend, marg, spec.seed, "fr_build")
            t0 = time.perf_counter()
            counts[name] = index.range_counts(eps)
            run.timings["fr_query"] += time.perf_counter() - t0
            del index
    finally:
        peak = run.finish()
    return eps, counts, run, peak


def _mean(values: np.ndarray) -> float:
    # exactly rounded, hence independent of summation order
    return math.fsum(values.tolist()) / values.size


def _finish(value, cloud, spec, eps, run, peak) -> EstimateResult:
    if not math.isfinite(value):
        raise FloatingPointError(f"non-finite estimate {value}")
    return EstimateResult(
        value=float(value), metric=spec.metric, k=spec.k, n=cloud.n,
        backend=spec.backend, timings=run.timings, peak_mem_bytes=peak,
        peak_rss_bytes=_peak_rss(), index_bytes=run.index_bytes,
        duplicates=int(np.count_nonzero(eps == 0.0)))


def estimate_mi(cloud: PointCloud, spec: Optional[EstimatorSpec] = None,
                track_memory: bool = False) -> EstimateResult:
    """KSG mutual information between roles ``x`` and ``y``."""
    spec = spec or EstimatorSpec("mi")
    if spec.metric != "mi":
        raise ValueError(f"spec is for {spec.metric}, not mi")
    _check_cloud(cloud, spec)
    roles = spec.resolved_roles(cloud.dims)
    eps, counts, run, peak = _neighbour_counts(
        cloud, spec, {"x": roles["x"], "y": roles["y"]}, track_memory)
    n = cloud.n
    terms = digamma_array(counts["x"] + 1) + digamma_array(counts["y"] + 1)
    value = digamma(spec.k) + digamma(n) - _mean(terms)
    return _finish(value, cloud, spec, eps, run, peak)


def _estimate_transfer(cloud, spec, track_memory):
    _check_cloud(cloud, spec)
    roles = spec.resolved_roles(cloud.dims)
    w, x, y = roles["w"], roles["x"], roles["y"]
    marginals = {"xw": x + w, "xy": x + y, "x": x}
    eps, counts, run, peak = _neighbour_counts(cloud, spec, marginals, track_memory)
    terms = (digamma_array(counts["xw"] + 1) + digamma_array(counts["xy"] + 1)
             - digamma_array(counts["x"] + 1))
    value = digamma(spec.k) - _mean(terms)
    return _finish(value, cloud, spec, eps, run, peak)


def estimate_te(cloud: PointCloud, spec: Optional[EstimatorSpec] = None,
                track_memory: bool = False) -> EstimateResult:
    """Transfer entropy from ``y`` to the target with records ``(w, x, y)``."""
    spec = spec or EstimatorSpec("te")
    if spec.metric != "te":
        raise ValueError(f"spec is for {spec.metric}, not te")
    return _estimate_transfer(cloud, spec, track_memory)


def estimate_gte(cloud: PointCloud, spec: Optional[EstimatorSpec] = None,
                 track_memory: bool = False) -> EstimateResult:
    """Global transfer entropy; ``y`` is the consensus or multivariate source.

    For indistinguishable units, pool every unit's records into one cloud.
    """
    spec = spec or EstimatorSpec("gte")
    if spec.metric != "gte":
        raise ValueError(f"spec is for {spec.metric}, not gte")
    return _estimate_transfer(cloud, spec, track_memory)


ESTIMATORS = {"mi": estimate_mi, "te": estimate_te, "gte": estimate_gte}


def estimate(cloud: PointCloud, spec: EstimatorSpec,
             track_memory: bool = False) -> EstimateResult:
    return ESTIMATORS[spec.metric](cloud, spec, track_memory)


def shuffle_surrogate(cloud: PointCloud, columns, seed: int = 0) -> PointCloud:
    """Permute the rows of ``columns`` jointly, leaving the rest aligned.

    The permutation is redrawn until it is not the identity (for N > 1).
    """
    columns = [int(c) for c in np.atleast_1d(columns)]
    for c in columns:
        if not 0 <= c < cloud.dims:
            raise ValueError(f"column {c} out of range")
    rng = np.random.default_rng(seed)
    n = cloud.n
    perm = rng.permutation(n)
    while n > 1 and np.array_equal(perm, np.arange(n)):
        perm = rng.permutation(n)
    data = np.array(cloud.data)
    data[:, columns] = cloud.data[perm][:, columns]
    return PointCloud(data, cloud.space)


def decimate(cloud: PointCloud, fraction: float, seed: int = 0,
             k: int = 3) -> PointCloud:
    """Uniform random subset of ``round(fraction * N)`` rows, order kept."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    m = int(round(fraction * cloud.n))
    if m < k + 1:
        raise ValueError(f"decimated cloud has {m} rows; k={k} needs {k + 1}")
    if m == cloud.n:
        return cloud
    rng = np.random.default_rng(seed)
    rows = np.sort(rng.choice(cloud.n, size=m, replace=False))
    return cloud.take(rows)
