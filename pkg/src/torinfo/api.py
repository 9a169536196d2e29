"""scikit-learn style wrappers around the estimators.

The estimate is a single number, so the classes only implement ``fit`` and
expose the result as ``value_``; there is nothing to transform or predict.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .estimators import EstimatorSpec, estimate
from .validation import check_cloud


class _InformationEstimator(BaseEstimator):
    _metric = ""

    def __init__(self, k=3, backend="vp", period=None, roles=None, seed=0):
        self.k = k
        self.backend = backend
        self.period = period
        self.roles = roles
        self.seed = seed

    def _stack(self, X, y):
        if y is None:
            return X
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        X = X[:, None] if X.ndim == 1 else X
        y = y[:, None] if y.ndim == 1 else y
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        return np.hstack([X, y])

    def fit(self, X, y=None):
        """Estimate from realisations ``X`` (rows), optionally with the
        source/second variable given separately as ``y``, appended as the
        last columns."""
        cloud = check_cloud(self._stack(X, y), self.period, min_rows=2)
        spec = EstimatorSpec(self._metric, k=self.k, roles=self.roles,
                             backend=self.backend, seed=self.seed)
        self.result_ = estimate(cloud, spec)
        self.value_ = self.result_.value
        self.n_features_in_ = cloud.dims
        return self

    def score(self, X=None, y=None):
        """The fitted estimate in nats (inputs are ignored)."""
        check_is_fitted(self, "value_")
        return self.value_


class MutualInformation(_InformationEstimator):
    """KSG mutual information between roles ``x`` and ``y`` (nats)."""

    _metric = "mi"


class TransferEntropy(_InformationEstimator):
    """Transfer entropy from records ``(w, x, y)``: next target, target past,
    source past (nats)."""

    _metric = "te"


class GlobalTransferEntropy(_InformationEstimator):
    """Global transfer entropy; ``y`` may span several columns (nats)."""

    _metric = "gte"
