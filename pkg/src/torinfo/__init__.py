"""Nearest-neighbour information estimators for periodic data."""

__version__ = "0.1.0"

from .api import GlobalTransferEntropy, MutualInformation, TransferEntropy
from .distributions import closed_form, sample
from .estimators import (EstimateResult, EstimatorSpec, decimate, estimate,
                         estimate_gte, estimate_mi, estimate_te,
                         shuffle_surrogate)
from .index import BACKENDS, make_index
from .space import PeriodicSpace, PointCloud, max_norm_dist, wrapped_diff
from .special import digamma

__all__ = [
    "__version__", "MutualInformation", "TransferEntropy",
    "GlobalTransferEntropy", "closed_form", "sample", "EstimateResult",
    "EstimatorSpec", "decimate", "estimate", "estimate_mi", "estimate_te",
    "estimate_gte", "shuffle_surrogate", "BACKENDS", "make_index",
    "PeriodicSpace", "PointCloud", "max_norm_dist", "wrapped_diff", "digamma",
]
