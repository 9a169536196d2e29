"""Digamma function.

Small arguments are lifted with ``psi(x) = psi(x + 1) - 1/x`` until
``x >= 10``; the asymptotic expansion then converges to well below 1e-13.
"""

import math

import numpy as np

_SHIFT_TO = 10.0
# Bernoulli-number coefficients B_2n / (2n) for n = 1..8
_ASYMPTOTIC = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
)


def _series(x):
    inv2 = 1.0 / (x * x)
    acc = 0.0
    for c in reversed(_ASYMPTOTIC):
        acc = (acc + c) * inv2
    return math.log(x) - 0.5 / x - acc


def digamma(x: float) -> float:
    """psi(x) for real ``x > 0``."""
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise ValueError(f"digamma is defined here for finite x > 0, got {x}")
    shift = 0.0
    while x < _SHIFT_TO:
        shift += 1.0 / x
        x += 1.0
    return _series(x) - shift


def digamma_array(x) -> np.ndarray:
    """Elementwise :func:`digamma`; repeated values are evaluated once."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return np.empty_like(x)
    if np.any(~(x > 0)) or not np.all(np.isfinite(x)):
        raise ValueError("digamma is defined here for finite x > 0")
    uniq, inverse = np.unique(x, return_inverse=True)
    vals = np.array([digamma(v) for v in uniq])
    return vals[inverse].reshape(x.shape)
