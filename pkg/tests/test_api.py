import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from torinfo import GlobalTransferEntropy, MutualInformation, TransferEntropy
from torinfo.distributions import sample_gaussian
from torinfo.estimators import EstimatorSpec, estimate


def test_params_and_clone():
    est = MutualInformation(k=4, backend="naive", period=None)
    assert est.get_params()["k"] == 4
    copy = clone(est)
    assert copy.get_params() == est.get_params() and copy is not est
    copy.set_params(k=2)
    assert copy.k == 2


def test_fit_matches_functional_api():
    cloud = sample_gaussian(0.9, 2, 2000, seed=1)
    est = MutualInformation().fit(cloud.data)
    assert est.value_ == estimate(cloud, EstimatorSpec("mi")).value
    assert est.score() == est.value_ and est.n_features_in_ == 2
    # y given separately is appended as the last column
    assert MutualInformation().fit(cloud.data[:, 0], cloud.data[:, 1]).value_ == est.value_


def test_transfer_classes_with_period():
    data = np.random.default_rng(0).random((800, 4)) * 2 * np.pi
    te = TransferEntropy(period="2pi").fit(data[:, :3])
    gte = GlobalTransferEntropy(period="2pi", roles={"w": [0], "x": [1], "y": [2, 3]}).fit(data)
    assert abs(te.value_) < 0.1 and abs(gte.value_) < 0.1


def test_errors():
    with pytest.raises(NotFittedError):
        MutualInformation().score()
    with pytest.raises(ValueError):
        MutualInformation().fit(np.zeros((5, 1)), np.zeros((4, 1)))
