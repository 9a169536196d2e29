import numpy as np
import pytest
import scipy.special as sc
from hypothesis import given, settings
from hypothesis import strategies as st

from torinfo.distributions import (sample_gaussian, sample_hahs_pethel,
                                   sample_uniform_wrapped)
from torinfo.estimators import (EstimatorSpec, decimate, estimate, estimate_gte,
                                estimate_mi, estimate_te, shuffle_surrogate)
from torinfo.space import TWO_PI, PeriodicSpace, PointCloud

PERIODIC = ["vp", "hybrid", "images", "naive"]


def _dist_matrix(data, periods):
    diff = np.abs(data[:, None, :] - data[None, :, :])
    for a, p in enumerate(periods):
        if p is not None:
            diff[..., a] = np.minimum(diff[..., a], p - diff[..., a])
    return diff.max(axis=-1)


def oracle(data, periods, k, metric, roles):
    """From-scratch KSG with dense distance matrices and scipy's digamma."""
    data = np.asarray(data, float)
    n = len(data)
    sub = lambda axes: _dist_matrix(data[:, axes], [periods[a] for a in axes])
    joint_axes = sorted(a for v in roles.values() for a in v)
    dj = sub(joint_axes)
    np.fill_diagonal(dj, np.inf)
    eps = np.sort(dj, axis=1)[:, k - 1]

    def count(axes):
        d = sub(axes)
        np.fill_diagonal(d, np.inf)
        return (d < eps[:, None]).sum(axis=1)

    if metric == "mi":
        nx, ny = count(roles["x"]), count(roles["y"])
        return sc.digamma(k) + sc.digamma(n) - np.mean(sc.digamma(nx + 1) + sc.digamma(ny + 1))
    w, x, y = roles["w"], roles["x"], roles["y"]
    return sc.digamma(k) - np.mean(sc.digamma(count(x + w) + 1)
                                   + sc.digamma(count(x + y) + 1)
                                   - sc.digamma(count(x) + 1))


class TestNaivePipelineOracle:
    def test_mi_n50(self, rng):
        data = rng.random((50, 2)) * TWO_PI
        data[:, 1] = np.mod(data[:, 0] + rng.normal(0, 0.5, 50), TWO_PI)
        cloud = PointCloud(data, PeriodicSpace.torus(2))
        expect = oracle(data, (TWO_PI, TWO_PI), 3, "mi", {"x": [0], "y": [1]})
        for b in PERIODIC:
            assert estimate_mi(cloud, EstimatorSpec("mi", backend=b)).value == pytest.approx(expect, abs=1e-12)

    @pytest.mark.parametrize("metric", ["te", "gte"])
    def test_transfer_n40(self, rng, metric):
        data = rng.random((40, 4)) * TWO_PI
        roles = {"w": [0], "x": [1], "y": [2, 3]} if metric == "gte" else {"w": [0], "x": [1], "y": [2]}
        dims = 4 if metric == "gte" else 3
        cloud = PointCloud(data[:, :dims], PeriodicSpace.torus(dims))
        expect = oracle(data[:, :dims], (TWO_PI,) * dims, 3, metric, roles)
        for b in PERIODIC:
            got = estimate(cloud, EstimatorSpec(metric, roles=roles, backend=b)).value
            assert got == pytest.approx(expect, abs=1e-12)

    @given(st.integers(0, 2**31), st.sampled_from(["mi", "te", "gte"]),
           st.integers(1, 5), st.booleans())
    @settings(max_examples=30)
    def test_random(self, seed, metric, k, periodic):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(k + 2, 60))
        dims = {"mi": 2, "te": 3, "gte": 4}[metric]
        data = np.round(rng.random((n, dims)) * TWO_PI, 1)  # plenty of ties
        periods = (TWO_PI if periodic else None,) * dims
        cloud = PointCloud(data, PeriodicSpace(dims, periods))
        spec = EstimatorSpec(metric, k=k, backend="vp")
        roles = spec.resolved_roles(dims)
        if np.all(data == data[0]):
            return
        got = estimate(cloud, spec).value
        assert got == pytest.approx(oracle(data, periods, k, metric, roles), abs=1e-11)


class TestInvariance:
    def test_backends_bit_identical(self):
        cloud = sample_uniform_wrapped(3, 10_000, seed=2)
        values = {b: estimate_te(cloud, EstimatorSpec("te", backend=b)).value
                  for b in ["vp", "hybrid", "images"]}
        assert len(set(values.values())) == 1

    def test_aperiodic_kd_matches_vp(self):
        cloud = sample_gaussian(0.9, 2, 3000, seed=1)
        a = estimate_mi(cloud, EstimatorSpec("mi", backend="kd")).value
        b = estimate_mi(cloud, EstimatorSpec("mi", backend="vp")).value
        assert a == b

    def test_row_order(self, rng):
        cloud = sample_uniform_wrapped(3, 2000, seed=4)
        perm = rng.permutation(cloud.n)
        for metric in ["mi", "te"]:
            a = estimate(cloud, EstimatorSpec(metric)).value
            b = estimate(cloud.take(perm), EstimatorSpec(metric)).value
            assert a == b

    def test_mi_role_symmetry(self):
        cloud = sample_gaussian(0.5, 2, 2000, seed=8)
        a = estimate_mi(cloud, EstimatorSpec("mi", roles={"x": [0], "y": [1]})).value
        b = estimate_mi(cloud, EstimatorSpec("mi", roles={"x": [1], "y": [0]})).value
        assert a == b

    def test_te_direction_matters(self):
        cloud = sample_hahs_pethel(n=5000, seed=3)
        forward = estimate_te(cloud).value
        # swap source and target pasts
        reverse = estimate_te(cloud, EstimatorSpec("te", roles={"w": [0], "x": [2], "y": [1]})).value
        assert forward != pytest.approx(reverse, abs=0.01)


class TestSurrogates:
    def test_shuffled_gaussian_mi(self):
        # one run has sd ~0.008 at this N, so average ten surrogates
        cloud = sample_gaussian(0.9, 2, 10_000, seed=5)
        values = [estimate_mi(shuffle_surrogate(cloud, [1], seed=s)).value for s in range(10)]
        assert abs(np.mean(values)) < 0.01

    def test_shuffle_not_identity(self):
        cloud = PointCloud([[0.0, 1.0], [1.0, 0.0]])
        for seed in range(20):
            out = shuffle_surrogate(cloud, [1], seed=seed)
            assert np.array_equal(out.data[:, 1], [0.0, 1.0])
            assert np.array_equal(out.data[:, 0], cloud.data[:, 0])

    def test_shuffle_bad_column(self):
        with pytest.raises(ValueError):
            shuffle_surrogate(PointCloud(np.zeros((3, 2))), [2])

    def test_decimate_gaussian_mi(self):
        cloud = sample_gaussian(0.9, 2, 10_000, seed=6)
        full = estimate_mi(cloud).value
        # one 10^3-row subset has sd ~0.035, so average fifty of them
        part = [estimate_mi(decimate(cloud, 0.1, seed=s)).value for s in range(50)]
        assert abs(full - np.mean(part)) < 0.02

    def test_decimate_full_fraction(self):
        cloud = sample_gaussian(0.2, 2, 500, seed=1)
        assert decimate(cloud, 1.0) is cloud
        assert decimate(cloud, 0.5, seed=1).n == 250

    @pytest.mark.parametrize("fraction", [0.0, 1.5, -0.1])
    def test_decimate_bad_fraction(self, fraction):
        with pytest.raises(ValueError):
            decimate(PointCloud(np.zeros((10, 2))), fraction)

    def test_decimate_too_small(self):
        with pytest.raises(ValueError):
            decimate(PointCloud(np.arange(20.0).reshape(10, 2)), 0.2, k=3)


class TestErrors:
    def test_identical_points(self):
        with pytest.raises(ValueError, match="degenerate"):
            estimate_mi(PointCloud(np.ones((10, 2))))

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            estimate_mi(PointCloud(np.arange(8.0).reshape(4, 2)), EstimatorSpec("mi", k=4))

    def test_kd_rejects_periodic(self):
        with pytest.raises(ValueError, match="periodic"):
            estimate_mi(sample_uniform_wrapped(2, 50, seed=0), EstimatorSpec("mi", backend="kd"))

    def test_unknown_metric_and_backend(self):
        with pytest.raises(ValueError):
            EstimatorSpec("entropy")
        with pytest.raises(ValueError):
            EstimatorSpec("mi", backend="ball")

    def test_spec_mismatch(self):
        with pytest.raises(ValueError):
            estimate_te(PointCloud(np.random.default_rng(0).random((10, 3))), EstimatorSpec("mi"))

    def test_too_few_columns(self):
        with pytest.raises(ValueError):
            estimate_te(PointCloud(np.random.default_rng(0).random((10, 2))))

    def test_not_a_cloud(self):
        with pytest.raises(TypeError):
            estimate_mi(np.zeros((10, 2)))


def test_result_metadata():
    cloud = sample_gaussian(0.5, 2, 300, seed=0)
    res = estimate_mi(cloud, track_memory=True)
    assert res.n == 300 and res.k == 3 and res.backend == "vp"
    assert res.peak_mem_bytes > 0 and res.total_seconds > 0
    assert set(res.as_dict()) >= {"value", "timings", "peak_mem_bytes"}
