"""Neighbour-search backends behind one query surface."""

from .base import SearchIndex
from .naive import NaiveIndex, naive_knn_distance, naive_range_count
from .periodic import (HybridIndex, ImagesIndex, build_hybrid_index,
                       build_images_index, hybrid_knn_distance,
                       hybrid_range_count, image_copies, shift_half_period)
from .sorted1d import Sorted1DIndex, sorted_1d_range_count
from .trees import (KDTreeIndex, VPTreeIndex, build_kd_tree, build_vp_tree,
                    vp_knn_distance, vp_range_count)

BACKENDS = {
    "naive": NaiveIndex,
    "kd": KDTreeIndex,
    "vp": VPTreeIndex,
    "hybrid": HybridIndex,
    "images": ImagesIndex,
}


def make_index(backend: str, cloud, seed: int = 0) -> SearchIndex:
    """Build the named backend over ``cloud``."""
    try:
        cls = BACKENDS[backend]
    except KeyError:
        raise ValueError(
            f"unknown backend {backend!r}; choose from {sorted(BACKENDS)}") from None
    index = cls(seed=seed) if cls is VPTreeIndex else cls()
    return index.fit(cloud)


__all__ = [
    "BACKENDS", "make_index", "SearchIndex", "NaiveIndex", "KDTreeIndex",
    "VPTreeIndex", "HybridIndex", "ImagesIndex", "Sorted1DIndex",
    "build_vp_tree", "build_kd_tree", "build_images_index",
    "build_hybrid_index", "vp_knn_distance", "vp_range_count",
    "hybrid_knn_distance", "hybrid_range_count", "naive_knn_distance",
    "naive_range_count", "sorted_1d_range_count", "image_copies",
    "shift_half_period",
]
