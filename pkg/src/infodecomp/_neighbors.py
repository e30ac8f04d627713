"""Exact max-norm neighbor kernels (numba).

Points are stored column-major: ``P[c, i]`` is coordinate ``c`` of sample
``i``, sorted on row 0 so that every candidate set is a contiguous slice.
Counting is strict (distance < radius) and excludes the query sample.
"""
import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def _lower(col, p, r):
    # first position q <= p with col[p] - col[q] < r
    a = 0
    b = p
    while a < b:
        mid = (a + b) // 2
        if col[p] - col[mid] < r:
            b = mid
        else:
            a = mid + 1
    return a


@njit(nogil=True, cache=True)
def _upper(col, p, r):
    # one past the last position q >= p with col[q] - col[p] < r
    a = p + 1
    b = col.shape[0]
    while a < b:
        mid = (a + b) // 2
        if col[mid] - col[p] < r:
            a = mid + 1
        else:
            b = mid
    return a


@njit(nogil=True, cache=True)
def _chebyshev(P, lo, hi, p, out):
    d = P.shape[0]
    m = hi - lo
    o = out[:m]
    row = P[0, lo:hi]
    v = P[0, p]
    for j in range(m):
        o[j] = abs(row[j] - v)
    for c in range(1, d):
        row = P[c, lo:hi]
        v = P[c, p]
        for j in range(m):
            a = abs(row[j] - v)
            o[j] = a if a > o[j] else o[j]


@njit(nogil=True, cache=True)
def _kth(dist, m, skip, k, buf):
    # k-th smallest of dist[:m] without entry ``skip``; inf if fewer than k
    filled = 0
    for j in range(m):
        if j == skip:
            continue
        v = dist[j]
        if filled < k:
            p = filled
            filled += 1
        elif v < buf[k - 1]:
            p = k - 1
        else:
            continue
        while p > 0 and buf[p - 1] > v:
            buf[p] = buf[p - 1]
            p -= 1
        buf[p] = v
    if filled < k:
        return np.inf
    return buf[k - 1]


@njit(nogil=True, cache=True)
def _count_le(dist, m, t):
    c = 0
    for j in range(m):
        c += 1 if dist[j] <= t else 0
    return c


@njit(nogil=True, cache=True)
def _select(dist, m, k, bound, d, small, buf):
    # k-th smallest of dist[:m], given that at least k entries are <= bound.
    # A volume-scaled guess usually leaves only ~k candidates to sort.
    c = _count_le(dist, m, bound)
    t = bound
    if c > 2 * k:
        guess = bound * (1.25 * k / c) ** (1.0 / d)
        if _count_le(dist, m, guess) >= k:
            t = guess
    q = 0
    for j in range(m):
        v = dist[j]
        if v <= t:
            small[q] = v
            q += 1
    return _kth(small, q, -1, k, buf)


@njit(nogil=True, cache=True)
def class_radii(P, k, probe):
    """Distance from each column of ``P`` to its k-th nearest other column.

    ``P`` holds one class, sorted on row 0. For an earlier point q among the
    ``probe`` preceding positions, radius(q) + dist(p, q) bounds radius(p)
    (q's k neighbors plus q itself, minus p, are that close). Every point
    whose row-0 gap is within the bound is examined, so the result is exact.
    """
    d, n = P.shape
    col = P[0]
    out = np.empty(n)
    dist = np.empty(n)
    small = np.empty(n)
    buf = np.empty(k)
    for p in range(n):
        lo = max(0, p - probe)
        _chebyshev(P, lo, p + 1, p, dist)
        bound = np.inf
        for q in range(lo, p):
            b = out[q] + dist[q - lo]
            bound = b if b < bound else bound
        # slack for rounding in the computed triangle inequality
        bound = bound * (1.0 + 1e-12)
        reach = np.nextafter(bound, np.inf)
        lo2 = _lower(col, p, reach)
        hi2 = _upper(col, p, reach)
        _chebyshev(P, lo2, hi2, p, dist)
        dist[p - lo2] = np.inf
        if bound == np.inf:
            out[p] = _kth(dist, hi2 - lo2, -1, k, buf)
        else:
            out[p] = _select(dist, hi2 - lo2, k, bound, d, small, buf)
    return out


@njit(nogil=True, cache=True)
def line_counts(col, rank, radii, out):
    """Strict 1-D neighbor counts by bisection.

    ``col`` is sorted; sample i sits at position ``rank[i]``; ``out[i]``
    receives the number of other entries within ``radii[i]``.
    """
    for i in range(rank.shape[0]):
        p = rank[i]
        out[i] = _upper(col, p, radii[i]) - _lower(col, p, radii[i]) - 1


@njit(nogil=True, cache=True)
def subspace_counts(P, labels, radii, blocks, masks, windowed):
    """Strict neighbor counts in several coordinate subspaces at shared radii.

    ``blocks[c]`` is the block of row ``c``; ``masks[s]`` is the bitmask of
    blocks making up subspace ``s``. With ``windowed`` set, row 0 must belong
    to every subspace and only the slice where its gap is below the radius
    is scanned.
    """
    d, n = P.shape
    n_sub = masks.shape[0]
    counts_all = np.zeros((n_sub, n), np.int64)
    counts_within = np.zeros((n_sub, n), np.int64)
    fail = np.empty(n, np.int32)
    same = np.empty(n, np.int32)
    col = P[0]
    for p in range(n):
        r = radii[p]
        if windowed:
            lo = _lower(col, p, r)
            hi = _upper(col, p, r)
        else:
            lo = 0
            hi = n
        m = hi - lo
        f = fail[:m]
        sm = same[:m]
        lab = labels[p]
        lb = labels[lo:hi]
        for j in range(m):
            f[j] = 0
            sm[j] = lb[j] == lab
        for c in range(d):
            bit = np.int32(1 << blocks[c])
            row = P[c, lo:hi]
            v = P[c, p]
            for j in range(m):
                f[j] |= bit if abs(row[j] - v) >= r else 0
        for s in range(n_sub):
            mask = np.int32(masks[s])
            ca = 0
            cw = 0
            for j in range(m):
                ok = (f[j] & mask) == 0
                ca += ok
                cw += ok & (sm[j] != 0)
            # the query itself sits at distance 0 < r
            counts_all[s, p] = ca - 1
            counts_within[s, p] = cw - 1
    return counts_all, counts_within
