"""Input checks shared by the estimators, indexes and CLI."""

from __future__ import annotations

import math
import numbers
from typing import Optional, Sequence

import numpy as np
from sklearn.utils import check_array

from .space import TWO_PI, PeriodicSpace, PointCloud


def check_k(k, n: int) -> int:
    if not isinstance(k, numbers.Integral) or isinstance(k, bool):
        raise TypeError(f"k must be an integer, got {k!r}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n - 1:
        raise ValueError(f"k={k} needs at least {k + 1} points, got {n}")
    return int(k)


def parse_period(token) -> Optional[float]:
    """Parse one period entry: ``none``, ``2pi``, ``pi`` or a number."""
    if token is None:
        return None
    if isinstance(token, numbers.Real):
        return float(token)
    s = str(token).strip().lower()
    if s in ("", "none", "-", "inf"):
        return None
    if s.endswith("pi"):
        head = s[:-2].strip()
        mult = 1.0 if head in ("", "+") else float(head)
        return mult * math.pi
    return float(s)


def as_periods(periods, dims: int) -> tuple:
    """Normalise the many ways of giving periods into a per-axis tuple."""
    if periods is None:
        return (None,) * dims
    if isinstance(periods, (str, numbers.Real)):
        return (parse_period(periods),) * dims
    periods = tuple(parse_period(p) for p in periods)
    if len(periods) == 1 and dims > 1:
        periods = periods * dims
    if len(periods) != dims:
        raise ValueError(f"expected {dims} periods, got {len(periods)}")
    return periods


def check_cloud(X, periods=None, min_rows: int = 1) -> PointCloud:
    """Turn array-like input (or a cloud) into a validated PointCloud."""
    if isinstance(X, PointCloud):
        if periods is not None:
            return PointCloud(X.data, PeriodicSpace(X.dims, as_periods(periods, X.dims)))
        if X.n < min_rows:
            raise ValueError(f"need at least {min_rows} rows, got {X.n}")
        return X
    arr = check_array(X, dtype=np.float64, ensure_2d=False,
                      ensure_min_samples=min_rows)
    if arr.ndim == 1:
        arr = arr[:, None]
    space = PeriodicSpace(arr.shape[1], as_periods(periods, arr.shape[1]))
    return PointCloud(arr, space)


def check_roles(layout: dict, dims: int, required: Sequence[str]) -> dict:
    """Validate a role -> column-list mapping against a cloud's width."""
    out = {}
    seen = set()
    for role in required:
        if role not in layout:
            raise ValueError(f"missing role {role!r}")
        cols = layout[role]
        if isinstance(cols, numbers.Integral):
            cols = [int(cols)]
        cols = [int(c) for c in cols]
        if not cols:
            raise ValueError(f"role {role!r} has no columns")
        for c in cols:
            if not 0 <= c < dims:
                raise ValueError(f"column {c} of role {role!r} out of range")
            if c in seen:
                raise ValueError(f"column {c} assigned to more than one role")
            seen.add(c)
        out[role] = cols
    extra = set(layout) - set(required)
    if extra:
        raise ValueError(f"unexpected roles {sorted(extra)}")
    return out


__all__ = ["check_k", "parse_period", "as_periods", "check_cloud",
           "check_roles", "TWO_PI"]
