"""Per-feature unique/redundant/synergistic decomposition and repeated runs."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .core import (
    KEY_BOOTSTRAP,
    KEY_REPEAT,
    KEY_SAMPLE,
    Dataset,
    DecompositionResult,
    EstimatorConfig,
    SearchTrace,
    jitter,
    make_result,
    prepare,
)
from .estimator import final_triplet
from .search import MAX, MIN, greedy_search, test_mi

QUANTITIES = ("mi", "cmi_zmin", "cmi_zmax", "unique", "redundant", "synergistic")


def decompose(dataset: Dataset, x: int, config: EstimatorConfig) -> DecompositionResult:
    """Decompose I(Y;X|Zmax) of source ``x`` into unique, redundant and synergistic parts.

    The min search only runs when I(Y;X) passes its surrogate test; the max
    search always runs, since a feature with no marginal information can
    still be synergistic.
    """
    gate = test_mi(dataset, x, config)
    if gate.significant:
        zmin, trace_min = greedy_search(dataset, x, MIN, config)
    else:
        zmin, trace_min = (), SearchTrace()
    zmax, trace_max = greedy_search(dataset, x, MAX, config)
    mi, cmi_zmin, cmi_zmax = final_triplet(dataset, x, zmin, zmax, config.k)
    return make_result(x, mi, gate.significant, cmi_zmin, cmi_zmax, zmin, zmax,
                       trace_min, trace_max)


def _pool_map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def decompose_all(dataset: Dataset, config: EstimatorConfig, threads: int = 1) -> list:
    """One decomposition per feature, in feature order."""
    return _pool_map(lambda x: decompose(dataset, x, config), list(range(dataset.n_features)),
                     threads)


def derive_seed(seed: int, *key: int) -> int:
    """64-bit seed for a sub-run, independent of scheduling."""
    state = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    lo, hi = state.generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)


@dataclass
class Aggregate:
    """Statistics of repeated decompositions.

    ``selection[direction][c, s]``: percent of repeats where feature ``c``
    entered the conditioning set of source ``s``.
    ``order[direction][s, j, c]``: percent of repeats where ``c`` was the
    feature accepted at iteration ``j + 1`` for source ``s``;
    ``reach[direction][s, j]`` is the percent of repeats with at least
    ``j + 1`` accepted features, equal to the sum over ``c``.
    """

    feature_names: tuple
    n_repeats: int
    mean: dict
    sd: dict
    mi_significant: np.ndarray
    selection: dict
    order: dict
    reach: dict

    def to_dict(self) -> dict:
        names = list(self.feature_names)
        out = {
            "n_repeats": self.n_repeats,
            "features": [],
            "selection": {},
            "order": {},
        }
        for j, name in enumerate(names):
            row = {"feature": name, "mi_significant_pct": float(self.mi_significant[j])}
            for q in QUANTITIES:
                row[f"{q}_mean"] = float(self.mean[q][j])
                row[f"{q}_sd"] = float(self.sd[q][j])
            out["features"].append(row)
        for d in (MIN, MAX):
            out["selection"][d] = {
                names[s]: {names[c]: float(self.selection[d][c, s]) for c in range(len(names))}
                for s in range(len(names))
            }
            out["order"][d] = {
                names[s]: [
                    {
                        "iteration": j + 1,
                        "reach_pct": float(self.reach[d][s, j]),
                        "selected_pct": {
                            names[c]: float(self.order[d][s, j, c]) for c in range(len(names))
                        },
                    }
                    for j in range(self.order[d].shape[1])
                ]
                for s in range(len(names))
            }
        return out


def aggregate(runs: list, feature_names) -> Aggregate:
    """Reduce per-repeat result lists (each ordered by feature) to summary tables."""
    m = len(feature_names)
    n = len(runs)
    if n == 0:
        raise ValueError("nothing to aggregate")
    values = {q: np.array([[getattr(r, q) for r in run] for run in runs]) for q in QUANTITIES}
    ddof = 1 if n > 1 else 0
    mean = {q: v.mean(axis=0) for q, v in values.items()}
    sd = {q: v.std(axis=0, ddof=ddof) for q, v in values.items()}
    sig = np.array([[r.mi_significant for r in run] for run in runs]).mean(axis=0) * 100.0
    depth = max(m - 1, 1)
    selection, order, reach = {}, {}, {}
    for d in (MIN, MAX):
        sel = np.zeros((m, m))
        ordr = np.zeros((m, depth, m))
        for run in runs:
            for r in run:
                chosen = r.zmin if d == MIN else r.zmax
                for j, c in enumerate(chosen):
                    sel[c, r.source_index] += 1
                    ordr[r.source_index, j, c] += 1
        selection[d] = sel * 100.0 / n
        order[d] = ordr * 100.0 / n
        reach[d] = ordr.sum(axis=2) * 100.0 / n
    return Aggregate(tuple(feature_names), n, mean, sd, sig, selection, order, reach)


def run_repeats(make: Callable[[int], tuple], n_repeats: int, threads: int = 1) -> list:
    """Evaluate ``make(r) -> (dataset, config)`` and decompose all features, per repeat."""

    def one(r):
        dataset, config = make(r)
        return decompose_all(dataset, config)

    return _pool_map(one, list(range(n_repeats)), threads)


def stratified_indices(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Rows drawn with replacement inside each class, keeping every class count."""
    rows = []
    for y in np.unique(labels):
        members = np.flatnonzero(labels == y)
        rows.append(rng.choice(members, size=members.size, replace=True))
    return np.concatenate(rows)


def bootstrap_decompose(dataset: Dataset, config: EstimatorConfig, n_repeats: int,
                        threads: int = 1, resampler: Optional[Callable] = None):
    """Class-stratified bootstrap of :func:`decompose_all`.

    Returns ``(aggregate, runs)``. ``resampler(labels, rng)`` may replace the
    stratified draw (it must return row indices).
    """
    if n_repeats < 1:
        raise ValueError("n_repeats must be positive")
    draw = resampler or stratified_indices

    def make(r):
        rng = np.random.default_rng(np.random.SeedSequence(config.seed,
                                                           spawn_key=(KEY_BOOTSTRAP, r)))
        sample = dataset.take(draw(dataset.labels, rng))
        sample = jitter(sample, config, KEY_BOOTSTRAP, r)
        return sample, replace(config, seed=derive_seed(config.seed, KEY_REPEAT, r))

    runs = run_repeats(make, n_repeats, threads)
    return aggregate(runs, dataset.feature_names), runs


def simulate_repeats(generator: Callable, n_per_class: int, config: EstimatorConfig,
                     n_repeats: int, threads: int = 1):
    """Decompose ``n_repeats`` fresh datasets from ``generator(n, seed) -> (dataset, ...)``.

    Repeat ``r`` samples with seed ``derive_seed(config.seed, KEY_SAMPLE, r)``
    and analyzes with ``derive_seed(config.seed, KEY_REPEAT, r)``, so results
    do not depend on ``threads``. Returns ``(aggregate, runs)``.
    """
    if n_repeats < 1:
        raise ValueError("n_repeats must be positive")
    names = []

    def make(r):
        out = generator(n_per_class, derive_seed(config.seed, KEY_SAMPLE, r))
        dataset = out[0] if isinstance(out, tuple) else out
        if not names:
            names.extend(dataset.feature_names)
        cfg = replace(config, seed=derive_seed(config.seed, KEY_REPEAT, r))
        return prepare(dataset, cfg), cfg

    runs = run_repeats(make, n_repeats, threads)
    return aggregate(runs, names), runs
