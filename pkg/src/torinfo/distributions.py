"""Seeded samplers with known information-theoretic ground truth.

All samplers draw from :func:`numpy.random.default_rng` (PCG64) seeded with
the given integer or :class:`numpy.random.SeedSequence`, so a seed fixes the
sample exactly. Closed forms are in nats.

Layouts: MI samples have columns ``(x, y)``; TE samples ``(w, x, y)``; GTE
samples ``(w, x, y1, y2)`` with a two-variable source. The equicorrelated
families use one correlation ``r`` between every pair of columns.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy import optimize
from scipy.special import gammaln

from .space import TWO_PI, PeriodicSpace, PointCloud, normalise
from .special import digamma

METRIC_DIMS = {"mi": 2, "te": 3, "gte": 4}

# Parameter sets of the sine-model von Mises tests
VON_MISES_SETS = {
    "a": dict(kappa1=10.0, kappa2=15.0, lam=10.0),
    "b": dict(kappa1=15.0, kappa2=12.0, lam=12.0),
    "c": dict(kappa1=12.0, kappa2=14.0, lam=-8.0),
}


def _rng(seed):
    return np.random.default_rng(seed)


def equicorrelation(dims: int, r: float) -> np.ndarray:
    cov = np.full((dims, dims), float(r))
    np.fill_diagonal(cov, 1.0)
    return cov


def _check_pd(cov):
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError("covariance matrix is not positive definite") from None


def _correlated_normals(r, dims, n, rng, cov=None):
    cov = equicorrelation(dims, r) if cov is None else np.asarray(cov, float)
    _check_pd(cov)
    chol = np.linalg.cholesky(cov)
    return rng.standard_normal((n, cov.shape[0])) @ chol.T


def sample_gaussian(r: float, dims: int, n: int, seed=None, cov=None) -> PointCloud:
    """Zero-mean, unit-variance Gaussian with pairwise correlation ``r``."""
    if not -1 < r < 1:
        raise ValueError(f"r must be in (-1, 1), got {r}")
    return PointCloud(_correlated_normals(r, dims, n, _rng(seed), cov))


def lognormal_log_correlation(r: float) -> float:
    """Correlation of the underlying normals of the log-normal family.

    The log-normal variables have unit mean, unit variance and covariance
    ``r``; their logarithms then have variance ``ln 2`` and covariance
    ``ln(1 + r)``.
    """
    return math.log1p(r) / math.log(2.0)


def sample_lognormal(r: float, dims: int, n: int, seed=None) -> PointCloud:
    """Log-normal vector with unit means, unit variances and covariance ``r``."""
    if not -1 < r < 1:
        raise ValueError(f"r must be in (-1, 1), got {r}")
    var = math.log(2.0)
    cov = np.full((dims, dims), math.log1p(r))
    np.fill_diagonal(cov, var)
    z = _correlated_normals(0.0, dims, n, _rng(seed), cov)
    return PointCloud(np.exp(z - 0.5 * var))


def sample_cauchy(r: float, dims: int, n: int, seed=None) -> PointCloud:
    """Multivariate Student-t with one degree of freedom, scale matrix with
    correlation ``r``: a correlated normal divided by an independent
    chi(1) draw."""
    if not -1 < r < 1:
        raise ValueError(f"r must be in (-1, 1), got {r}")
    rng = _rng(seed)
    z = _correlated_normals(r, dims, n, rng)
    chi = np.abs(rng.standard_normal(n))
    return PointCloud(z / chi[:, None])


def sample_uniform(dims: int, n: int, seed=None) -> PointCloud:
    """Independent uniforms on ``[0, 1)``, aperiodic."""
    return PointCloud(_rng(seed).random((n, dims)))


def sample_uniform_wrapped(dims: int, n: int, seed=None,
                           period: float = TWO_PI) -> PointCloud:
    """Independent uniforms on the torus ``[0, period)^dims``."""
    data = _rng(seed).random((n, dims)) * period
    return PointCloud(data, PeriodicSpace.torus(dims, period))


def _von_mises_logdensity(kappa1, kappa2, lam):
    def f(u, v):
        return kappa1 * np.cos(u) + kappa2 * np.cos(v) + lam * np.sin(u) * np.sin(v)
    return f


def _von_mises_log_max(kappa1, kappa2, lam) -> float:
    f = _von_mises_logdensity(kappa1, kappa2, lam)
    grid = np.linspace(-math.pi, math.pi, 721)
    U, V = np.meshgrid(grid, grid, indexing="ij")
    vals = f(U, V)
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    res = optimize.minimize(lambda p: -f(p[0], p[1]), [grid[i], grid[j]],
                            method="BFGS", options={"gtol": 1e-12})
    top = max(float(vals[i, j]), -float(res.fun))
    # pad for the optimiser tolerance; keeps the envelope above the density
    return top + 1e-9 * max(1.0, abs(top))


def sample_von_mises_sine(kappa1: float, kappa2: float, lam: float,
                          mu1: float = math.pi, mu2: float = math.pi,
                          n: int = 10_000, seed=None,
                          max_rounds: int = 10_000) -> PointCloud:
    """Bivariate sine-model von Mises on ``[0, 2pi)^2`` by rejection.

    Proposals are uniform on the torus; a proposal is kept with probability
    ``exp(f(u, v) - f_max)`` where ``f`` is the log density and ``f_max`` its
    maximum, found numerically.
    """
    if kappa1 < 0 or kappa2 < 0:
        raise ValueError("concentrations must be non-negative")
    rng = _rng(seed)
    f = _von_mises_logdensity(kappa1, kappa2, lam)
    log_max = _von_mises_log_max(kappa1, kappa2, lam)
    out = np.empty((n, 2))
    filled = 0
    batch = max(4096, 16 * n)
    for _ in range(max_rounds):
        if filled >= n:
            break
        uv = rng.random((batch, 2)) * TWO_PI - math.pi
        accept = rng.random(batch) < np.exp(f(uv[:, 0], uv[:, 1]) - log_max)
        got = uv[accept][: n - filled]
        out[filled:filled + len(got)] = got
        filled += len(got)
    else:
        if filled < n:
            raise RuntimeError("von Mises rejection sampler hit its round cap")
    out[:, 0] += mu1
    out[:, 1] += mu2
    return PointCloud(normalise(out, TWO_PI), PeriodicSpace.torus(2))


def sample_hahs_pethel(Q: float = 1.0, R: float = 2.0, a: float = 0.9,
                       h_c: float = 1.0, x0: float = 0.0, n: int = 10_000,
                       seed=None, burn_in: int = 1000) -> PointCloud:
    """First-order filtering model: a hidden AR(1) state observed with noise.

    ``x[t+1] = a x[t] + N(0, Q)`` and ``y[t] = h_c x[t] + N(0, R)``. Records
    describe information flowing from the state into the measurement, laid
    out as ``(y[t], y[t-1], x[t-1])``: target next, target past, source past.
    """
    if Q <= 0 or R <= 0:
        raise ValueError("noise variances must be positive")
    rng = _rng(seed)
    steps = burn_in + n + 1
    w = rng.standard_normal(steps) * math.sqrt(Q)
    v = rng.standard_normal(steps) * math.sqrt(R)
    x = np.empty(steps)
    x[0] = x0
    for t in range(1, steps):
        x[t] = a * x[t - 1] + w[t - 1]
    y = h_c * x + v
    s = burn_in + 1
    data = np.column_stack([y[s:], y[s - 1:-1], x[s - 1:-1]])
    return PointCloud(data)


# ------------------------------------------------------------- closed forms

def _logdet(m):
    sign, val = np.linalg.slogdet(np.atleast_2d(m))
    if sign <= 0:
        raise ValueError("covariance matrix is not positive definite")
    return val


def gaussian_mi(r: float) -> float:
    return -0.5 * math.log1p(-r * r)


def gaussian_transfer(cov) -> float:
    """Gaussian TE/GTE from a covariance over ``(w, x, y...)`` columns."""
    cov = np.asarray(cov, dtype=float)
    d = cov.shape[0]
    y = list(range(2, d))
    xy = [1] + y
    xw = [0, 1]
    sub = lambda idx: cov[np.ix_(idx, idx)]
    return 0.5 * float(-_logdet(cov) + _logdet(sub(xy)) + _logdet(sub(xw))
                  - _logdet(sub([1])))


def cauchy_gte_constant(d: int) -> float:
    """Non-Gaussian part of the t(1) GTE closed form; ``d`` is the joint
    dimension of the records."""
    return (3.0 + gammaln((1 + d) / 2) - math.log(4.0) - gammaln(d / 2)
            - 0.5 * math.log(math.pi) - (d + 1) / 2 * digamma((d + 1) / 2)
            + d / 2 * digamma(d / 2) + 0.5 * digamma(1.0))


def hahs_pethel_te(Q: float = 1.0, R: float = 2.0, a: float = 0.9,
                   h_c: float = 1.0) -> float:
    """Stationary one-lag TE from state to measurement of the filter model."""
    if not abs(a) < 1:
        raise ValueError("the state process must be stationary (|a| < 1)")
    P = Q / (1 - a * a)
    var_y = h_c * h_c * P + R
    cov_lag = h_c * h_c * a * P
    given_past = var_y - cov_lag * cov_lag / var_y
    given_both = h_c * h_c * Q + R
    return 0.5 * math.log(given_past / given_both)


def von_mises_mi(kappa1: float, kappa2: float, lam: float,
                 grid: int = 1024) -> float:
    """MI of the sine model by periodic trapezoidal quadrature.

    The integrand is smooth and periodic, so the rule converges
    geometrically; 1024 nodes per axis is far past double precision for the
    tabulated parameter sets.
    """
    t = np.arange(grid) * (TWO_PI / grid)
    U, V = np.meshgrid(t, t, indexing="ij")
    logf = _von_mises_logdensity(kappa1, kappa2, lam)(U, V)
    logf -= logf.max()
    f = np.exp(logf)
    h = TWO_PI / grid
    p = f / (f.sum() * h * h)
    px = p.sum(axis=1) * h
    py = p.sum(axis=0) * h
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(p > 0, p * np.log(p / np.outer(px, py)), 0.0)
    return float(integrand.sum() * h * h)


def closed_form(metric: str, distribution: str, params: Optional[dict] = None) -> float:
    """Analytic value in nats of ``metric`` for a named distribution."""
    metric = metric.lower()
    distribution = distribution.lower()
    params = dict(params or {})
    if distribution in ("uniform", "uniform_wrapped"):
        if metric not in METRIC_DIMS:
            raise ValueError(f"unknown metric {metric!r}")
        return 0.0
    if distribution in ("gaussian", "lognormal", "cauchy"):
        r = float(params.get("r", 0.0))
        dims = int(params.get("dims", METRIC_DIMS.get(metric, 0)))
        rho = lognormal_log_correlation(r) if distribution == "lognormal" else r
        if metric == "mi":
            base = gaussian_mi(rho)
        elif metric in ("te", "gte"):
            cov = params.get("cov")
            base = gaussian_transfer(equicorrelation(dims, rho) if cov is None else cov)
        else:
            raise ValueError(f"unknown metric {metric!r}")
        if distribution != "cauchy":
            return base
        if metric == "mi":
            return math.log(8 * math.pi) - 3.0 + base
        if metric == "te":
            return 4.0 - math.log(16 * math.pi) + base
        return cauchy_gte_constant(dims) + base
    if distribution == "hahs_pethel":
        if metric != "te":
            raise ValueError("the filter model has a closed form for te only")
        keys = ("Q", "R", "a", "h_c")
        return hahs_pethel_te(**{k: float(params[k]) for k in keys if k in params})
    if distribution == "von_mises":
        if metric != "mi":
            raise ValueError("the von Mises model has a closed form for mi only")
        p = von_mises_params(params)
        return von_mises_mi(p["kappa1"], p["kappa2"], p["lam"])
    raise ValueError(f"unknown distribution {distribution!r}")


def von_mises_params(params: dict) -> dict:
    p = dict(VON_MISES_SETS[params["set"]]) if "set" in params else {}
    for key in ("kappa1", "kappa2", "lam", "mu1", "mu2"):
        if key in params:
            p[key] = float(params[key])
    if "mu" in params:
        p["mu1"] = p["mu2"] = float(params["mu"])
    missing = {"kappa1", "kappa2", "lam"} - set(p)
    if missing:
        raise ValueError(f"von Mises parameters missing: {sorted(missing)}")
    return p


DISTRIBUTIONS = ("gaussian", "lognormal", "cauchy", "uniform",
                 "uniform_wrapped", "von_mises", "hahs_pethel")


def sample(distribution: str, metric: str, n: int, seed=None,
           params: Optional[dict] = None) -> PointCloud:
    """Draw a cloud laid out for ``metric`` from a named distribution."""
    distribution = distribution.lower()
    params = dict(params or {})
    dims = int(params.get("dims", METRIC_DIMS[metric]))
    if distribution == "gaussian":
        return sample_gaussian(float(params.get("r", 0.0)), dims, n, seed)
    if distribution == "lognormal":
        return sample_lognormal(float(params.get("r", 0.0)), dims, n, seed)
    if distribution == "cauchy":
        return sample_cauchy(float(params.get("r", 0.0)), dims, n, seed)
    if distribution == "uniform":
        return sample_uniform(dims, n, seed)
    if distribution == "uniform_wrapped":
        return sample_uniform_wrapped(dims, n, seed)
    if distribution == "von_mises":
        if metric != "mi":
            raise ValueError("von Mises samples are bivariate (mi only)")
        p = von_mises_params(params)
        return sample_von_mises_sine(p["kappa1"], p["kappa2"], p["lam"],
                                     p.get("mu1", math.pi), p.get("mu2", math.pi),
                                     n, seed)
    if distribution == "hahs_pethel":
        if metric != "te":
            raise ValueError("filter-model samples are TE records")
        keys = {"Q": 1.0, "R": 2.0, "a": 0.9, "h_c": 1.0, "x0": 0.0}
        kw = {k: float(params.get(k, v)) for k, v in keys.items()}
        return sample_hahs_pethel(n=n, seed=seed,
                                  burn_in=int(params.get("burn_in", 1000)), **kw)
    raise ValueError(f"unknown distribution {distribution!r}")
