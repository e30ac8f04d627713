"""Mixed discrete/continuous kNN estimates of I(Y; features) and CMI.

Radii come from the k-th same-class neighbor in the highest-dimensional
search space; neighbor counts in every lower-dimensional subspace are
taken at those same radii (max-norm, strict inequality).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _neighbors
from .core import ClassTooSmall, Dataset, DegenerateRadius, DomainError, InfoDecompError

EULER_GAMMA = 0.57721566490153286061

# Bernoulli-number coefficients B_2n / (2n) of the digamma asymptotic series
_ASYMPTOTIC = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)

# earlier positions whose radii bound the next radius search
_PROBE = 16


class EmptySearchSpace(InfoDecompError, ValueError):
    pass


class SubspaceNotCounted(InfoDecompError, KeyError):
    pass


def digamma(x):
    """Digamma function for positive arguments (scalar or array).

    Shifts the argument upward with psi(x) = psi(x + 1) - 1/x until it is at
    least 10, then sums the asymptotic series through x**-14.
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(~(arr > 0)):
        raise DomainError("digamma is only defined here for x > 0")
    xs = arr.copy()
    acc = np.zeros_like(xs)
    low = xs < 10.0
    while low.any():
        acc[low] -= 1.0 / xs[low]
        xs[low] += 1.0
        low = xs < 10.0
    inv2 = 1.0 / (xs * xs)
    series = np.zeros_like(xs)
    for c in reversed(_ASYMPTOTIC):
        series = series * inv2 + c
    out = acc + np.log(xs) - 0.5 / xs - series * inv2
    if np.ndim(x) == 0:
        return float(out)
    return out


@lru_cache(maxsize=8)
def _digamma_table(n: int) -> np.ndarray:
    # psi(0) is never used; index j holds psi(j) for j >= 1
    t = np.empty(n + 1)
    t[0] = np.nan
    t[1:] = digamma(np.arange(1, n + 1, dtype=np.float64))
    t.setflags(write=False)
    return t


def _psi_int(values: np.ndarray, table_size: int) -> np.ndarray:
    return _digamma_table(table_size)[values]


@dataclass
class NeighborCounts:
    """Shared radii and strict neighbor counts for a set of subspaces.

    ``counts_all[s]`` / ``counts_within[s]`` are keyed by the subspace as a
    frozenset of feature indices.
    """

    search_space: tuple
    k: int
    radii: np.ndarray
    counts_all: dict
    counts_within: dict


@dataclass
class MiEstimate:
    total: float
    per_class: dict  # class label -> (specific value, weight)


def _check_classes(dataset: Dataset, k: int):
    for cls, n_y in zip(dataset.class_alphabet, dataset.class_counts):
        if n_y <= k:
            raise ClassTooSmall(cls, int(n_y), k)


def _plan_groups(subspaces: list, order: Sequence[int]):
    """Split subspaces into groups that share one coordinate.

    Greedy: the coordinate (ties broken by search-space order) contained in
    the most remaining subspaces anchors the next group.
    """
    remaining = list(subspaces)
    groups = []
    while remaining:
        best = max(order, key=lambda c: (sum(c in s for s in remaining), -order.index(c)))
        members = [s for s in remaining if best in s]
        remaining = [s for s in remaining if best not in s]
        groups.append((best, members))
    return groups


def _class_rows(dataset: Dataset, order: np.ndarray, y: int) -> np.ndarray:
    # rows of class y in the given sort order
    return order[dataset.labels[order] == y]


def _radii(dataset: Dataset, cols, k):
    features = dataset.features
    radii = np.empty(dataset.n_samples)
    order = dataset.column_order(cols[0])
    for y in range(dataset.n_classes):
        idx = _class_rows(dataset, order, y)
        P = np.ascontiguousarray(features[np.ix_(idx, cols)].T)
        radii[idx] = _neighbors.class_radii(P, k, _PROBE)
    return radii


def _group_counts(dataset: Dataset, radii, anchor, members, order):
    features = dataset.features
    union = [c for c in order if any(c in s for s in members)]
    cols = [anchor] + [c for c in union if c != anchor]
    # coordinates with the same membership pattern collapse into one block
    patterns: dict = {}
    blocks = np.empty(len(cols), np.int64)
    for i, c in enumerate(cols):
        sig = tuple(c in s for s in members)
        blocks[i] = patterns.setdefault(sig, len(patterns))
    if len(patterns) > 31:
        raise ValueError("too many distinct coordinate blocks")
    masks = np.zeros(len(members), np.int64)
    for sig, b in patterns.items():
        for s_i, inside in enumerate(sig):
            if inside:
                masks[s_i] |= 1 << b
    perm = dataset.column_order(anchor)
    P = np.ascontiguousarray(features[np.ix_(perm, cols)].T)
    ca, cw = _neighbors.subspace_counts(
        P, dataset.labels[perm], radii[perm], blocks, masks, True
    )
    out_all = np.empty_like(ca)
    out_within = np.empty_like(cw)
    out_all[:, perm] = ca
    out_within[:, perm] = cw
    return out_all, out_within


def _line_counts(dataset: Dataset, radii, c):
    col = dataset.features[:, c]
    order = dataset.column_order(c)
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    counts_all = np.empty(col.size, np.int64)
    _neighbors.line_counts(col[order], rank, radii, counts_all)
    counts_within = np.empty(col.size, np.int64)
    for y in range(dataset.n_classes):
        idx = _class_rows(dataset, order, y)
        # idx is sorted on the column, so class-local ranks are 0..n_y-1
        part = np.empty(idx.size, np.int64)
        _neighbors.line_counts(col[idx], np.arange(idx.size), radii[idx], part)
        counts_within[idx] = part
    return counts_all, counts_within


def _counts_arrays(dataset: Dataset, search_space, subspaces, k):
    order = list(search_space)
    subs = []
    for s in subspaces:
        fs = frozenset(s)
        if not fs <= set(order):
            raise ValueError(f"subspace {sorted(fs)} is not inside the search space")
        if fs and fs not in subs:
            subs.append(fs)
    lines = [s for s in subs if len(s) == 1]
    groups = _plan_groups([s for s in subs if len(s) > 1], order)
    # radius search sorts on the anchor of the first group (any coordinate works)
    first = groups[0][0] if groups else order[0]
    cols = [first] + [c for c in order if c != first]
    radii = _radii(dataset, cols, k)
    if not np.all(radii > 0):
        raise DegenerateRadius(int(np.flatnonzero(~(radii > 0))[0]))
    counts_all, counts_within = {}, {}
    for s in lines:
        (c,) = s
        counts_all[s], counts_within[s] = _line_counts(dataset, radii, c)
    for anchor, members in groups:
        ca, cw = _group_counts(dataset, radii, anchor, members, order)
        for i, s in enumerate(members):
            counts_all[s] = ca[i]
            counts_within[s] = cw[i]
    return NeighborCounts(tuple(order), k, radii, counts_all, counts_within)


def compute_counts(dataset: Dataset, search_space, subspaces, k: int) -> NeighborCounts:
    """Radii from the k-th same-class neighbor in ``search_space`` and strict
    neighbor counts (all samples / same class) in each requested subspace."""
    search_space = tuple(int(c) for c in search_space)
    if not search_space:
        raise EmptySearchSpace("search space must contain at least one feature")
    if len(set(search_space)) != len(search_space):
        raise ValueError("search space has repeated features")
    _check_classes(dataset, k)
    return _counts_arrays(dataset, search_space, subspaces, k)


def mi_class_features(dataset: Dataset, feature_set, counts: NeighborCounts) -> MiEstimate:
    """I(Y; feature_set) from shared-radius counts.

    In the full search space the within-class count is replaced by k;
    otherwise both the all-sample and same-class counts enter.
    """
    s = frozenset(int(c) for c in feature_set)
    n = dataset.n_samples
    labels = dataset.labels
    ny = dataset.class_counts
    if not s:
        per_class = {
            cls: (0.0, ny[y] / n) for y, cls in enumerate(dataset.class_alphabet)
        }
        return MiEstimate(0.0, per_class)
    if s not in counts.counts_all:
        raise SubspaceNotCounted(f"subspace {sorted(s)} was not counted")
    size = n + 1
    m_all = _psi_int(counts.counts_all[s] + 1, size)
    if s == frozenset(counts.search_space):
        terms = _digamma_table(size)[counts.k] - m_all
    else:
        terms = _psi_int(counts.counts_within[s] + 1, size) - m_all
    psi_n = _digamma_table(size)[n]
    per_class = {}
    total = 0.0
    for y, cls in enumerate(dataset.class_alphabet):
        mask = labels == y
        specific = float(psi_n - _digamma_table(size)[ny[y]] + terms[mask].mean())
        weight = ny[y] / n
        per_class[cls] = (specific, weight)
        total += weight * specific
    return MiEstimate(float(total), per_class)


def cmi_pair(dataset: Dataset, x: int, z, v: int, k: int):
    """(I(Y;X|Z,V), I(Y;X|Z)) from one shared-radius count in {X, Z, V}."""
    z = tuple(int(c) for c in z)
    if x in z or v in z or v == x:
        raise ValueError("x, z and v must be disjoint")
    space = (x,) + z + (v,)
    zv = frozenset(z + (v,))
    xz = frozenset((x,) + z)
    counts = compute_counts(dataset, space, [space, zv, xz, z], k)
    with_v = (
        mi_class_features(dataset, space, counts).total
        - mi_class_features(dataset, zv, counts).total
    )
    without_v = (
        mi_class_features(dataset, xz, counts).total
        - mi_class_features(dataset, z, counts).total
    )
    return with_v, without_v


def mi_standalone(dataset: Dataset, x: int, k: int) -> MiEstimate:
    """I(Y;X) with neighbor search and counting in the single feature ``x``."""
    counts = compute_counts(dataset, (x,), [(x,)], k)
    return mi_class_features(dataset, (x,), counts)


def final_triplet(dataset: Dataset, x: int, zmin, zmax, k: int):
    """(I(Y;X), I(Y;X|Zmin), I(Y;X|Zmax)) in the joint space {X, Zmin u Zmax}."""
    zmin = tuple(int(c) for c in zmin)
    zmax = tuple(int(c) for c in zmax)
    if x in zmin or x in zmax:
        raise ValueError("conditioning sets must exclude the source")
    space = (x,) + zmin + tuple(c for c in zmax if c not in zmin)
    subs = [(x,), (x,) + zmin, zmin, (x,) + zmax, zmax]
    counts = compute_counts(dataset, space, subs, k)

    def projected(s):
        s = frozenset(s)
        if not s:
            return 0.0
        return _projected_total(dataset, s, counts)

    mi = projected((x,))
    cmi_zmin = projected((x,) + zmin) - projected(zmin) if zmin else mi - 0.0
    cmi_zmax = projected((x,) + zmax) - projected(zmax) if zmax else mi - 0.0
    return mi, cmi_zmin, cmi_zmax


def _projected_total(dataset: Dataset, s: frozenset, counts: NeighborCounts) -> float:
    n = dataset.n_samples
    size = n + 1
    ny = dataset.class_counts
    terms = _psi_int(counts.counts_within[s] + 1, size) - _psi_int(
        counts.counts_all[s] + 1, size
    )
    table = _digamma_table(size)
    total = 0.0
    for y in range(dataset.n_classes):
        specific = float(table[n] - table[ny[y]] + terms[dataset.labels == y].mean())
        total += (ny[y] / n) * specific
    return float(total)
