import numpy as np
import pytest

from infodecomp.core import DegenerateRadius, EstimatorConfig, prepare
from infodecomp.decomp import (
    QUANTITIES,
    aggregate,
    bootstrap_decompose,
    decompose,
    decompose_all,
    derive_seed,
    simulate_repeats,
    stratified_indices,
)
from infodecomp.scenarios import gen_redundancy, gen_unique

CFG = EstimatorConfig(n_surrogates=19, seed=5)


def test_unique_feature_decomposition():
    ds = prepare(gen_unique(400, 1)[0], CFG)
    r = decompose(ds, 0, CFG)
    assert r.mi_significant
    assert r.zmin == () and r.zmax == ()
    assert r.unique == r.mi and r.redundant == 0.0 and r.synergistic == 0.0
    assert r.mi > 0.25


def test_null_feature_skips_min_search():
    ds = prepare(gen_unique(400, 2)[0], CFG)
    r = decompose(ds, 1, CFG)
    assert not r.mi_significant
    assert r.trace_min.iterations == []
    assert len(r.trace_max.iterations) == 1


def test_identities_hold_for_all_features():
    ds = prepare(gen_redundancy(300, 3)[0], CFG)
    for r in decompose_all(ds, CFG):
        assert r.unique == r.cmi_zmin
        assert r.unique + r.redundant == r.mi
        assert r.mi + r.synergistic == r.cmi_zmax


def test_threads_do_not_change_results():
    ds = prepare(gen_redundancy(200, 3)[0], CFG)
    a = [r.to_dict() for r in decompose_all(ds, CFG, threads=1)]
    b = [r.to_dict() for r in decompose_all(ds, CFG, threads=3)]
    assert a == b


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(1, 7, 0) == derive_seed(1, 7, 0)
    assert len({derive_seed(1, 7, r) for r in range(50)}) == 50
    assert 0 <= derive_seed(2**64 - 1, 3) < 2**64


def test_aggregate_tables():
    ds = prepare(gen_redundancy(200, 1)[0], CFG)
    run = decompose_all(ds, CFG)
    agg = aggregate([run, run], ds.feature_names)
    assert agg.n_repeats == 2
    for q in QUANTITIES:
        assert np.all(agg.sd[q] == 0.0)
    assert agg.selection["min"][1, 0] == 100.0
    assert agg.order["min"][0, 0, 1] == 100.0
    assert np.allclose(agg.reach["min"], agg.order["min"].sum(axis=2))
    doc = agg.to_dict()
    assert doc["selection"]["min"]["X1"]["X2"] == 100.0
    with pytest.raises(ValueError):
        aggregate([], ds.feature_names)


def test_stratified_indices_keep_class_counts():
    labels = np.array([0] * 30 + [1] * 12 + [2] * 7)
    idx = stratified_indices(labels, np.random.default_rng(0))
    assert np.array_equal(np.bincount(labels[idx]), [30, 12, 7])


def test_bootstrap_is_reproducible_and_thread_independent():
    ds = prepare(gen_redundancy(150, 2)[0], CFG)
    agg1, runs1 = bootstrap_decompose(ds, CFG, 3, threads=1)
    agg2, runs2 = bootstrap_decompose(ds, CFG, 3, threads=3)
    assert [[r.to_dict() for r in run] for run in runs1] == \
        [[r.to_dict() for r in run] for run in runs2]
    assert agg1.to_dict() == agg2.to_dict()


def test_bootstrap_duplicates_without_jitter_fail_cleanly():
    ds = gen_unique(60, 1)[0]
    no_jitter = EstimatorConfig(k=1, n_surrogates=19, jitter_scale=0.0)
    with pytest.raises(DegenerateRadius):
        bootstrap_decompose(ds, no_jitter, 1)
    agg, _ = bootstrap_decompose(ds, EstimatorConfig(k=1, n_surrogates=19), 1)
    assert np.all(np.isfinite(agg.mean["mi"]))


def test_simulate_repeats_uses_fresh_datasets():
    agg, runs = simulate_repeats(gen_unique, 150, CFG, 2)
    assert agg.feature_names == ("X1", "X2")
    assert runs[0][0].mi != runs[1][0].mi
    with pytest.raises(ValueError):
        simulate_repeats(gen_unique, 150, CFG, 0)
