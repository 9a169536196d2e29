"""Compiled search kernels shared by every backend.

Conventions used throughout:

* ``periods`` is a float array with ``0.0`` marking an aperiodic axis.
* Distances reported to callers are always evaluated with :func:`dist` on the
  *original* coordinates, so every backend returns the same bits as the naive
  scan. Trees built over shifted or duplicated coordinates only use those
  coordinates for pruning, padded by ``slack``.
* Counts are strict: ``d < eps``. The query row never counts itself.
"""

import numpy as np
from numba import njit

INF = np.inf


@njit(inline="always", cache=True)
def dist(A, i, B, j, periods):
    best = 0.0
    for a in range(A.shape[1]):
        diff = abs(A[i, a] - B[j, a])
        p = periods[a]
        if p > 0.0:
            alt = p - diff
            if alt < diff:
                diff = alt
        if diff > best:
            best = diff
    return best


@njit(inline="always", cache=True)
def wall_distance(C, i, periods):
    """Distance from row ``i`` to the nearest wall of its frame."""
    best = INF
    for a in range(C.shape[1]):
        p = periods[a]
        if p > 0.0:
            c = C[i, a]
            w = p - c
            if c < w:
                w = c
            if w < best:
                best = w
    return best


@njit(inline="always", cache=True)
def _insert(best_d, k, d):
    # best_d is sorted ascending; drop the current worst
    j = k - 1
    while j > 0 and best_d[j - 1] > d:
        best_d[j] = best_d[j - 1]
        j -= 1
    best_d[j] = d


@njit(cache=True)
def select(keys, perm, lo, hi, kth):
    """Partial sort of ``keys[lo:hi]`` (with ``perm`` riding along).

    Afterwards ``keys[kth]`` holds the value it would have in sorted order,
    with no larger value before it and no smaller value after it.
    """
    l = lo
    r = hi - 1
    while r > l:
        m = (l + r) >> 1
        a = keys[l]
        b = keys[m]
        c = keys[r]
        if a < b:
            if b < c:
                x = b
            elif a < c:
                x = c
            else:
                x = a
        else:
            if a < c:
                x = a
            elif b < c:
                x = c
            else:
                x = b
        i = l
        j = r
        while i <= j:
            while keys[i] < x:
                i += 1
            while x < keys[j]:
                j -= 1
            if i <= j:
                t = keys[i]
                keys[i] = keys[j]
                keys[j] = t
                tp = perm[i]
                perm[i] = perm[j]
                perm[j] = tp
                i += 1
                j -= 1
        if kth <= j:
            r = j
        elif kth >= i:
            l = i
        else:
            break


# ---------------------------------------------------------------- naive scan

@njit(cache=True)
def naive_knn(X, periods, k, out):
    n = X.shape[0]
    buf = np.empty(n - 1)
    dummy = np.empty(n - 1, dtype=np.int64)
    for i in range(n):
        m = 0
        for j in range(n):
            if j != i:
                buf[m] = dist(X, i, X, j, periods)
                m += 1
        select(buf, dummy, 0, n - 1, k - 1)
        out[i] = buf[k - 1]


@njit(cache=True)
def naive_knn_one(X, periods, i, k, buf):
    n = X.shape[0]
    best = np.full(k, INF)
    for j in range(n):
        if j != i:
            d = dist(X, i, X, j, periods)
            if d < best[k - 1]:
                _insert(best, k, d)
    return best[k - 1]


@njit(cache=True)
def naive_count_one(X, periods, i, eps):
    c = 0
    for j in range(X.shape[0]):
        if j != i and dist(X, i, X, j, periods) < eps:
            c += 1
    return c


@njit(cache=True)
def naive_count(X, periods, eps, out):
    for i in range(X.shape[0]):
        out[i] = naive_count_one(X, periods, i, eps[i])


# ---------------------------------------------------------- sorted 1D counts

@njit(inline="always", cache=True)
def _first_true_left_near(vs, lo, hi, c, eps):
    # first index in [lo, hi) with (c - vs[idx]) < eps; predicate is monotone
    while lo < hi:
        mid = (lo + hi) >> 1
        if c - vs[mid] < eps:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(inline="always", cache=True)
def _first_false_left_far(vs, lo, hi, c, eps, p):
    # first index in [lo, hi) where not (p - (c - vs[idx]) < eps)
    while lo < hi:
        mid = (lo + hi) >> 1
        if p - (c - vs[mid]) < eps:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(inline="always", cache=True)
def _first_false_right_near(vs, lo, hi, c, eps):
    while lo < hi:
        mid = (lo + hi) >> 1
        if vs[mid] - c < eps:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(inline="always", cache=True)
def _first_true_right_far(vs, lo, hi, c, eps, p):
    while lo < hi:
        mid = (lo + hi) >> 1
        if p - (vs[mid] - c) < eps:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def sorted_count_one(vs, p, c, eps):
    """Elements of sorted ``vs`` strictly within ``eps`` of ``c``, minus one
    occurrence of ``c`` itself. ``p == 0`` means aperiodic."""
    if not eps > 0.0:
        return 0
    n = vs.shape[0]
    # split: first index with vs > c
    lo = 0
    hi = n
    while lo < hi:
        mid = (lo + hi) >> 1
        if vs[mid] > c:
            hi = mid
        else:
            lo = mid + 1
    split = lo
    ln = _first_true_left_near(vs, 0, split, c, eps)
    rn = _first_false_right_near(vs, split, n, c, eps)
    left = split - ln
    right = rn - split
    if p > 0.0:
        lf = _first_false_left_far(vs, 0, split, c, eps, p)
        rf = _first_true_right_far(vs, split, n, c, eps, p)
        left = min(split, left + lf)
        right = min(n - split, right + (n - rf))
    return left + right - 1


@njit(cache=True)
def sorted_count(vs, p, centers, eps, out):
    for i in range(centers.shape[0]):
        out[i] = sorted_count_one(vs, p, centers[i], eps[i])


# ------------------------------------------------------------------ VP tree

@njit(cache=True)
def vp_build(X, periods, u, P, src, mu, nn, far_max, work):
    """Fill a vantage-point tree laid out in pre-order over positions.

    The node for range ``[lo, hi)`` sits at position ``lo``; its near child
    covers ``[lo+1, lo+1+nn[lo])`` and its far child the rest. ``u`` holds one
    uniform draw per position for vantage selection. Returns the depth.
    """
    n = X.shape[0]
    d = X.shape[1]
    perm = np.arange(n)
    st_lo = np.empty(n + 1, dtype=np.int64)
    st_hi = np.empty(n + 1, dtype=np.int64)
    st_lv = np.empty(n + 1, dtype=np.int64)
    top = 0
    st_lo[0] = 0
    st_hi[0] = n
    st_lv[0] = 1
    top = 1
    depth = 0
    while top > 0:
        top -= 1
        lo = st_lo[top]
        hi = st_hi[top]
        lv = st_lv[top]
        if lv > depth:
            depth = lv
        size = hi - lo
        r = lo + int(u[lo] * size)
        if r >= hi:
            r = hi - 1
        t = perm[lo]
        perm[lo] = perm[r]
        perm[r] = t
        v = perm[lo]
        if size == 1:
            mu[lo] = 0.0
            nn[lo] = 0
            far_max[lo] = 0.0
            continue
        for j in range(lo + 1, hi):
            work[j] = dist(X, v, X, perm[j], periods)
        m = size - 1
        med = lo + 1 + (m - 1) // 2
        select(work, perm, lo + 1, hi, med)
        thr = work[med]
        # strict partition: d < thr first
        i = lo + 1
        j = hi - 1
        while True:
            while i <= j and work[i] < thr:
                i += 1
            while i <= j and not (work[j] < thr):
                j -= 1
            if i >= j:
                break
            tw = work[i]
            work[i] = work[j]
            work[j] = tw
            tp = perm[i]
            perm[i] = perm[j]
            perm[j] = tp
        n_near = i - (lo + 1)
        fm = 0.0
        for j in range(i, hi):
            if work[j] > fm:
                fm = work[j]
        mu[lo] = thr
        nn[lo] = n_near
        far_max[lo] = fm
        if hi > i:
            st_lo[top] = i
            st_hi[top] = hi
            st_lv[top] = lv + 1
            top += 1
        if n_near > 0:
            st_lo[top] = lo + 1
            st_hi[top] = i
            st_lv[top] = lv + 1
            top += 1
    for pos in range(n):
        src[pos] = perm[pos]
        for a in range(d):
            P[pos, a] = X[perm[pos], a]
    return depth


@njit(cache=True)
def vp_knn_one(P, src, mu, nn, far_max, periods, X, qi, k, slack,
               best, st_lo, st_hi, st_lb):
    for j in range(k):
        best[j] = INF
    n = P.shape[0]
    top = 1
    st_lo[0] = 0
    st_hi[0] = n
    st_lb[0] = 0.0
    while top > 0:
        top -= 1
        lo = st_lo[top]
        hi = st_hi[top]
        lb = st_lb[top]
        tau = best[k - 1]
        if lb > tau + slack:
            continue
        d = dist(X, qi, P, lo, periods)
        if src[lo] != qi and d < tau:
            _insert(best, k, d)
            tau = best[k - 1]
        if hi - lo == 1:
            continue
        m = mu[lo]
        mid = lo + 1 + nn[lo]
        near_lb = max(lb, d - m)
        far_lb = max(lb, max(m - d, d - far_max[lo]))
        if d < m:
            if hi > mid and far_lb <= tau + slack:
                st_lo[top] = mid
                st_hi[top] = hi
                st_lb[top] = far_lb
                top += 1
            if mid > lo + 1 and near_lb <= tau + slack:
                st_lo[top] = lo + 1
                st_hi[top] = mid
                st_lb[top] = near_lb
                top += 1
        else:
            if mid > lo + 1 and near_lb <= tau + slack:
                st_lo[top] = lo + 1
                st_hi[top] = mid
                st_lb[top] = near_lb
                top += 1
            if hi > mid and far_lb <= tau + slack:
                st_lo[top] = mid
                st_hi[top] = hi
                st_lb[top] = far_lb
                top += 1
    return best[k - 1]


@njit(cache=True)
def vp_knn(P, src, mu, nn, far_max, periods, X, k, slack, depth, out):
    best = np.empty(k)
    cap = 2 * depth + 8
    st_lo = np.empty(cap, dtype=np.int64)
    st_hi = np.empty(cap, dtype=np.int64)
    st_lb = np.empty(cap)
    for qi in range(X.shape[0]):
        out[qi] = vp_knn_one(P, src, mu, nn, far_max, periods, X, qi, k,
                             slack, best, st_lo, st_hi, st_lb)


@njit(cache=True)
def vp_count_one(P, src, mu, nn, far_max, periods, X, qi, eps, slack,
                 st_lo, st_hi):
    if not eps > 0.0:
        return 0
    n = P.shape[0]
    lim = eps + slack
    c = 0
    top = 1
    st_lo[0] = 0
    st_hi[0] = n
    while top > 0:
        top -= 1
        lo = st_lo[top]
        hi = st_hi[top]
        d = dist(X, qi, P, lo, periods)
        if d < eps and src[lo] != qi:
            c += 1
        if hi - lo == 1:
            continue
        m = mu[lo]
        mid = lo + 1 + nn[lo]
        if mid > lo + 1 and d - m < lim:
            st_lo[top] = lo + 1
            st_hi[top] = mid
            top += 1
        if hi > mid and m - d < lim and d - far_max[lo] < lim:
            st_lo[top] = mid
            st_hi[top] = hi
            top += 1
    return c


@njit(cache=True)
def vp_count(P, src, mu, nn, far_max, periods, X, eps, slack, depth, out):
    cap = 2 * depth + 8
    st_lo = np.empty(cap, dtype=np.int64)
    st_hi = np.empty(cap, dtype=np.int64)
    for qi in range(X.shape[0]):
        out[qi] = vp_count_one(P, src, mu, nn, far_max, periods, X, qi,
                               eps[qi], slack, st_lo, st_hi)


# ------------------------------------------------------------------ KD tree

@njit(cache=True)
def kd_build(T, tmap, TP, src, axis, nl, work):
    """Median-split KD tree over rows of ``T`` (tree-frame coordinates).

    ``tmap`` maps rows of ``T`` to source indices. The node for ``[lo, hi)``
    is the median point along the axis of largest spread, stored at ``lo``;
    the left (<=) child covers ``[lo+1, lo+1+nl[lo])``. Returns the depth.
    """
    n = T.shape[0]
    d = T.shape[1]
    perm = np.arange(n)
    st_lo = np.empty(n + 1, dtype=np.int64)
    st_hi = np.empty(n + 1, dtype=np.int64)
    st_lv = np.empty(n + 1, dtype=np.int64)
    st_lo[0] = 0
    st_hi[0] = n
    st_lv[0] = 1
    top = 1
    depth = 0
    while top > 0:
        top -= 1
        lo = st_lo[top]
        hi = st_hi[top]
        lv = st_lv[top]
        if lv > depth:
            depth = lv
        size = hi - lo
        if size == 1:
            axis[lo] = 0
            nl[lo] = 0
            continue
        best_ax = 0
        best_spread = -1.0
        for a in range(d):
            mn = INF
            mx = -INF
            for j in range(lo, hi):
                v = T[perm[j], a]
                if v < mn:
                    mn = v
                if v > mx:
                    mx = v
            if mx - mn > best_spread:
                best_spread = mx - mn
                best_ax = a
        for j in range(lo, hi):
            work[j] = T[perm[j], best_ax]
        mid = lo + size // 2
        select(work, perm, lo, hi, mid)
        t = perm[lo]
        perm[lo] = perm[mid]
        perm[mid] = t
        tw = work[lo]
        work[lo] = work[mid]
        work[mid] = tw
        axis[lo] = best_ax
        nl[lo] = mid - lo
        if hi > mid + 1:
            st_lo[top] = mid + 1
            st_hi[top] = hi
            st_lv[top] = lv + 1
            top += 1
        if mid > lo:
            st_lo[top] = lo + 1
            st_hi[top] = mid + 1
            st_lv[top] = lv + 1
            top += 1
    for pos in range(n):
        src[pos] = tmap[perm[pos]]
        for a in range(d):
            TP[pos, a] = T[perm[pos], a]
    return depth


@njit(cache=True)
def kd_knn_one(TP, src, axis, nl, qc, X, periods, qi, k, slack, dedup,
               stamp, stamp_id, best, st_lo, st_hi, st_lb):
    """k-th smallest exact distance from row ``qi`` of ``X``.

    Pruning uses tree-frame coordinates ``qc`` of the query; distances are
    evaluated on ``X`` under ``periods``. With ``dedup`` each source index is
    considered once per query (images backend).
    """
    for j in range(k):
        best[j] = INF
    n = TP.shape[0]
    top = 1
    st_lo[0] = 0
    st_hi[0] = n
    st_lb[0] = 0.0
    while top > 0:
        top -= 1
        lo = st_lo[top]
        hi = st_hi[top]
        lb = st_lb[top]
        tau = best[k - 1]
        if lb > tau + slack:
            continue
        s = src[lo]
        if s != qi:
            if dedup:
                if stamp[s] != stamp_id:
                    stamp[s] = stamp_id
                    dd = dist(X, qi, X, s, periods)
                    if dd < tau:
                        _insert(best, k, dd)
                        tau = best[k - 1]
            else:
                dd = dist(X, qi, X, s, periods)
                if dd < tau:
                    _insert(best, k, dd)
                    tau = best[k - 1]
        if hi - lo == 1:
            continue
        ax = axis[lo]
        diff = qc[ax] - TP[lo, ax]
        mid = lo + 1 + nl[lo]
        if diff < 0.0:
            far_lb = max(lb, -diff)
            if hi > mid and far_lb <= tau + slack:
                st_lo[top] = mid
                st_hi[top] = hi
                st_lb[top] = far_lb
                top += 1
            if mid > lo + 1:
                st_lo[top] = lo + 1
                st_hi[top] = mid
                st_lb[top] = lb
                top += 1
        else:
            far_lb = max(lb, diff)
            if mid > lo + 1 and far_lb <= tau + slack:
                st_lo[top] = lo + 1
                st_hi[top] = mid
                st_lb[top] = far_lb
                top += 1
            if hi > mid:
                st_lo[top] = mid
                st_hi[top] = hi
                st_lb[top] = lb
                top += 1
    return best[k - 1]


@njit(cache=True)
def kd_count_one(TP, src, axis, nl, qc, X, periods, qi, eps, slack, dedup,
                 stamp, stamp_id, st_lo, st_hi, st_lb):
    if not eps > 0.0:
        return 0
    lim = eps + slack
    n = TP.shape[0]
    c = 0
    top = 1
    st_lo[0] = 0
    st_hi[0] = n
    st_lb[0] = 0.0
    while top > 0:
        top -= 1
        lo = st_lo[top]
        hi = st_hi[top]
        lb = st_lb[top]
        s = src[lo]
        if s != qi:
            if dedup:
                if stamp[s] != stamp_id and dist(X, qi, X, s, periods) < eps:
                    stamp[s] = stamp_id
                    c += 1
            elif dist(X, qi, X, s, periods) < eps:
                c += 1
        if hi - lo == 1:
            continue
        ax = axis[lo]
        diff = qc[ax] - TP[lo, ax]
        mid = lo + 1 + nl[lo]
        if diff < 0.0:
            if mid > lo + 1:
                st_lo[top] = lo + 1
                st_hi[top] = mid
                st_lb[top] = lb
                top += 1
            far_lb = max(lb, -diff)
            if hi > mid and far_lb < lim:
                st_lo[top] = mid
                st_hi[top] = hi
                st_lb[top] = far_lb
                top += 1
        else:
            if hi > mid:
                st_lo[top] = mid
                st_hi[top] = hi
                st_lb[top] = lb
                top += 1
            far_lb = max(lb, diff)
            if mid > lo + 1 and far_lb < lim:
                st_lo[top] = lo + 1
                st_hi[top] = mid
                st_lb[top] = far_lb
                top += 1
    return c


@njit(cache=True)
def kd_knn(TP, src, axis, nl, Q, X, periods, k, slack, dedup, depth, out):
    n = X.shape[0]
    best = np.empty(k)
    cap = 2 * depth + 8
    st_lo = np.empty(cap, dtype=np.int64)
    st_hi = np.empty(cap, dtype=np.int64)
    st_lb = np.empty(cap)
    stamp = np.full(n if dedup else 1, -1, dtype=np.int64)
    for qi in range(n):
        out[qi] = kd_knn_one(TP, src, axis, nl, Q[qi], X, periods, qi, k,
                             slack, dedup, stamp, qi, best, st_lo, st_hi,
                             st_lb)


@njit(cache=True)
def kd_count(TP, src, axis, nl, Q, X, periods, eps, slack, dedup, depth, out):
    n = X.shape[0]
    cap = 2 * depth + 8
    st_lo = np.empty(cap, dtype=np.int64)
    st_hi = np.empty(cap, dtype=np.int64)
    st_lb = np.empty(cap)
    stamp = np.full(n if dedup else 1, -1, dtype=np.int64)
    for qi in range(n):
        out[qi] = kd_count_one(TP, src, axis, nl, Q[qi], X, periods, qi,
                               eps[qi], slack, dedup, stamp, qi, st_lo,
                               st_hi, st_lb)


# ------------------------------------------------------------- hybrid tiers

@njit(cache=True)
def hybrid_knn(TP1, src1, ax1, nl1, d1, TP2, src2, ax2, nl2, d2, S, X,
               periods, k, slack, out, tiers, tally):
    """Three-tier periodic kNN: original tree, half-shifted tree, naive."""
    n = X.shape[0]
    best = np.empty(k)
    cap = 2 * max(d1, d2) + 8
    st_lo = np.empty(cap, dtype=np.int64)
    st_hi = np.empty(cap, dtype=np.int64)
    st_lb = np.empty(cap)
    stamp = np.empty(1, dtype=np.int64)
    buf = np.empty(1)
    for qi in range(n):
        tau = kd_knn_one(TP1, src1, ax1, nl1, X[qi], X, periods, qi, k,
                         slack, False, stamp, 0, best, st_lo, st_hi, st_lb)
        if wall_distance(X, qi, periods) >= tau + slack:
            out[qi] = tau
            tiers[qi] = 1
            tally[0] += 1
            continue
        tau = kd_knn_one(TP2, src2, ax2, nl2, S[qi], X, periods, qi, k,
                         slack, False, stamp, 0, best, st_lo, st_hi, st_lb)
        if wall_distance(S, qi, periods) >= tau + slack:
            out[qi] = tau
            tiers[qi] = 2
            tally[1] += 1
            continue
        out[qi] = naive_knn_one(X, periods, qi, k, buf)
        tiers[qi] = 3
        tally[2] += 1


@njit(cache=True)
def hybrid_count(TP1, src1, ax1, nl1, d1, TP2, src2, ax2, nl2, d2, S, X,
                 periods, eps, slack, out, tiers, tally):
    n = X.shape[0]
    cap = 2 * max(d1, d2) + 8
    st_lo = np.empty(cap, dtype=np.int64)
    st_hi = np.empty(cap, dtype=np.int64)
    st_lb = np.empty(cap)
    stamp = np.empty(1, dtype=np.int64)
    for qi in range(n):
        e = eps[qi]
        if wall_distance(X, qi, periods) >= e + slack:
            out[qi] = kd_count_one(TP1, src1, ax1, nl1, X[qi], X, periods,
                                   qi, e, slack, False, stamp, 0, st_lo,
                                   st_hi, st_lb)
            tiers[qi] = 1
            tally[0] += 1
        elif wall_distance(S, qi, periods) >= e + slack:
            out[qi] = kd_count_one(TP2, src2, ax2, nl2, S[qi], X, periods,
                                   qi, e, slack, False, stamp, 0, st_lo,
                                   st_hi, st_lb)
            tiers[qi] = 2
            tally[1] += 1
        else:
            out[qi] = naive_count_one(X, periods, qi, e)
            tiers[qi] = 3
            tally[2] += 1
