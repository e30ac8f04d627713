import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import brute_counts, quad_mi_two_gaussians
from infodecomp.core import (
    ClassTooSmall,
    Dataset,
    DegenerateRadius,
    DomainError,
    EstimatorConfig,
    prepare,
)
from infodecomp.estimator import (
    EmptySearchSpace,
    SubspaceNotCounted,
    cmi_pair,
    compute_counts,
    digamma,
    final_triplet,
    mi_class_features,
    mi_standalone,
)
from infodecomp.scenarios import gen_unique


def _random_instance(rng, ties):
    n = int(rng.integers(30, 300))
    m = int(rng.integers(1, 7))
    f = rng.standard_normal((n, m))
    if ties:
        f = np.round(f, 1)
    labels = rng.integers(0, int(rng.integers(1, 4)), n)
    return Dataset.from_arrays(f, labels)


def _assert_matches_brute(ds, space, subs, k):
    radii, ref = brute_counts(ds.features, ds.labels, space, subs, k)
    if not np.all(radii > 0):
        with pytest.raises(DegenerateRadius):
            compute_counts(ds, space, subs, k)
        return
    res = compute_counts(ds, space, subs, k)
    assert np.array_equal(res.radii, radii)
    for s, (c_all, c_within) in ref.items():
        assert np.array_equal(res.counts_all[s], c_all)
        assert np.array_equal(res.counts_within[s], c_within)


@pytest.mark.parametrize("seed", range(12))
def test_counts_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    ds = _random_instance(rng, ties=seed % 3 == 0)
    k = int(rng.integers(1, 6))
    if ds.class_counts.min() <= k:
        k = int(ds.class_counts.min()) - 1
    m = ds.n_features
    space = tuple(int(c) for c in rng.permutation(m)[: int(rng.integers(1, m + 1))])
    subs = [tuple(c for c in space if rng.random() < 0.6) for _ in range(4)] + [space]
    _assert_matches_brute(ds, space, subs, k)


@settings(max_examples=25, deadline=None)
@given(st.integers(12, 80), st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_counts_match_brute_force_property(n, m, k, seed):
    rng = np.random.default_rng(seed)
    f = np.round(rng.standard_normal((n, m)) * 3) / 3
    ds = Dataset.from_arrays(f, np.arange(n) % 2)
    if ds.class_counts.min() <= k:
        return
    space = tuple(range(m))
    subs = [space] + [(j,) for j in range(m)] + [space[1:]]
    _assert_matches_brute(ds, space, subs, k)


def test_strict_count_in_full_space_is_k_minus_one_without_ties():
    rng = np.random.default_rng(4)
    ds = Dataset.from_arrays(rng.standard_normal((200, 3)), rng.integers(0, 2, 200))
    res = compute_counts(ds, (0, 1, 2), [(0, 1, 2)], 5)
    assert np.all(res.counts_within[frozenset({0, 1, 2})] == 4)


def test_count_argument_errors():
    ds = Dataset.from_arrays(np.random.default_rng(0).standard_normal((20, 2)), [0, 1] * 10)
    with pytest.raises(EmptySearchSpace):
        compute_counts(ds, (), [], 3)
    with pytest.raises(ValueError):
        compute_counts(ds, (0,), [(1,)], 3)
    with pytest.raises(ClassTooSmall):
        compute_counts(ds, (0,), [(0,)], 10)
    counts = compute_counts(ds, (0, 1), [(0, 1)], 3)
    with pytest.raises(SubspaceNotCounted):
        mi_class_features(ds, (1,), counts)
    assert mi_class_features(ds, (), counts).total == 0.0


@pytest.mark.parametrize("x", [1e-3, 0.5, 1.0, 2.0, 7.5, 9.99, 10.0, 37.0, 1e4, 1e7])
def test_digamma_against_mpmath(x):
    assert digamma(x) == pytest.approx(float(mpmath.digamma(x)), rel=1e-14, abs=1e-14)


def test_digamma_domain_and_arrays():
    with pytest.raises(DomainError):
        digamma(0.0)
    with pytest.raises(DomainError):
        digamma(np.array([1.0, -2.0]))
    vals = digamma(np.arange(1, 2001, dtype=float))
    ref = np.array([float(mpmath.digamma(i)) for i in range(1, 2001)])
    np.testing.assert_allclose(vals, ref, rtol=1e-14, atol=1e-14)


def test_cmi_pair_is_difference_of_mi_terms():
    ds = prepare(gen_unique(300, 1)[0], EstimatorConfig())
    with_v, without_v = cmi_pair(ds, 0, (), 1, 10)
    counts = compute_counts(ds, (0, 1), [(0, 1), (1,), (0,)], 10)
    full = mi_class_features(ds, (0, 1), counts).total
    assert with_v == pytest.approx(full - mi_class_features(ds, (1,), counts).total, abs=0)
    assert without_v == pytest.approx(mi_class_features(ds, (0,), counts).total, abs=0)
    with pytest.raises(ValueError):
        cmi_pair(ds, 0, (1,), 1, 10)


def test_final_triplet_without_conditioning_is_mi_three_times():
    ds = prepare(gen_unique(200, 2)[0], EstimatorConfig())
    mi, a, b = final_triplet(ds, 0, (), (), 10)
    assert mi == a == b
    with pytest.raises(ValueError):
        final_triplet(ds, 0, (0,), (), 10)


def test_mi_is_invariant_to_common_scaling_and_shift():
    ds = gen_unique(300, 3)[0]
    base = cmi_pair(ds, 0, (), 1, 10)
    moved = Dataset(ds.features * 2.0 + 1.0, ds.labels, ds.feature_names, ds.class_alphabet)
    assert cmi_pair(moved, 0, (), 1, 10) == pytest.approx(base, abs=1e-12)


def test_specific_values_average_to_total():
    ds = prepare(gen_unique(300, 5)[0], EstimatorConfig())
    est = mi_standalone(ds, 0, 10)
    total = sum(v * w for v, w in est.per_class.values())
    assert total == pytest.approx(est.total, abs=1e-14)
    assert set(est.per_class) == {"y1", "y2"}


def test_standalone_mi_against_quadrature_small_scale():
    truth = quad_mi_two_gaussians(1.0, -1.0)
    vals = [mi_standalone(gen_unique(1000, s)[0], 0, 10).total for s in range(10)]
    assert np.mean(vals) == pytest.approx(truth, abs=0.03)
