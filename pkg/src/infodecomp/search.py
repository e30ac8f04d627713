"""Greedy min/max conditioning-set search with permutation-surrogate stopping."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    KEY_DELTA_MAX,
    KEY_DELTA_MIN,
    KEY_MI_TEST,
    Dataset,
    EstimatorConfig,
    IterationRecord,
    SearchTrace,
    name_key,
    rng_stream,
)
from .estimator import cmi_pair, mi_standalone

MIN = "min"
MAX = "max"
_DIRECTION_KEY = {MIN: KEY_DELTA_MIN, MAX: KEY_DELTA_MAX}


@dataclass
class SurrogateTest:
    observed: float
    surrogate_values: np.ndarray
    threshold: float
    significant: bool


def surrogate_threshold(values, alpha: float) -> float:
    """The ceil((1 - alpha) * n)-th order statistic of ``values``."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    n = values.size
    # round first so that e.g. 0.95 * 100 cannot become 95.00000000000001
    rank = math.ceil(round((1.0 - alpha) * n, 9))
    rank = min(max(rank, 1), n)
    return float(values[rank - 1])


def _finish(observed, values, alpha) -> SurrogateTest:
    values = np.asarray(values, dtype=np.float64)
    threshold = surrogate_threshold(values, alpha)
    return SurrogateTest(float(observed), values, threshold, bool(observed > threshold))


def _permuted(dataset: Dataset, column: int, rng: np.random.Generator) -> Dataset:
    return dataset.permute_column(column, rng.permutation(dataset.n_samples))


def test_mi(dataset: Dataset, x: int, config: EstimatorConfig) -> SurrogateTest:
    """Is I(Y;X) above the (1 - alpha) quantile of its column-shuffled surrogates?"""
    observed = mi_standalone(dataset, x, config.k).total
    src = name_key(dataset.feature_names[x])
    values = []
    for s in range(config.n_surrogates):
        rng = rng_stream(config.seed, KEY_MI_TEST, src, s)
        values.append(mi_standalone(_permuted(dataset, x, rng), x, config.k).total)
    return _finish(observed, values, config.alpha)


def _delta(pair, direction):
    with_v, without_v = pair
    return without_v - with_v if direction == MIN else with_v - without_v


def test_delta(dataset: Dataset, x: int, z, v: int, direction: str,
               config: EstimatorConfig, iteration: int = 1, pair=None) -> SurrogateTest:
    """One-sided surrogate test of the CMI change brought by candidate ``v``.

    ``pair`` may carry an already computed ``cmi_pair`` result for the
    unpermuted data. Each surrogate permutes column ``v`` and recomputes both
    terms with radii from the space that contains the permuted column.
    """
    if direction not in _DIRECTION_KEY:
        raise ValueError(f"direction must be {MIN!r} or {MAX!r}")
    z = tuple(z)
    if pair is None:
        pair = cmi_pair(dataset, x, z, v, config.k)
    src = name_key(dataset.feature_names[x])
    values = []
    for s in range(config.n_surrogates):
        rng = rng_stream(config.seed, _DIRECTION_KEY[direction], src, iteration, s)
        values.append(_delta(cmi_pair(_permuted(dataset, v, rng), x, z, v, config.k), direction))
    return _finish(_delta(pair, direction), values, config.alpha)


def greedy_search(dataset: Dataset, x: int, direction: str, config: EstimatorConfig):
    """Grow a conditioning set that minimizes or maximizes I(Y;X|Z).

    Each round scores every remaining feature, tests only the best one and
    stops at the first rejected candidate. Returns the selected features (in
    selection order) and the search trace.
    """
    if direction not in _DIRECTION_KEY:
        raise ValueError(f"direction must be {MIN!r} or {MAX!r}")
    remaining = [j for j in range(dataset.n_features) if j != x]
    selected: list = []
    trace = SearchTrace()
    current = None
    iteration = 0
    while remaining:
        iteration += 1
        pairs = {v: cmi_pair(dataset, x, tuple(selected), v, config.k) for v in remaining}
        scores = {v: pairs[v][0] for v in remaining}
        sign = 1.0 if direction == MIN else -1.0
        best = min(remaining, key=lambda v: (sign * scores[v], v))
        test = test_delta(dataset, x, selected, best, direction, config,
                          iteration=iteration, pair=pairs[best])
        with_v, without_v = pairs[best]
        before = without_v if current is None else current
        improves = with_v < before if direction == MIN else with_v > before
        accepted = test.significant and improves
        trace.iterations.append(
            IterationRecord(
                candidate_scores=scores,
                selected=best,
                cmi_before=before,
                cmi_after=with_v if accepted else before,
                observed=test.observed,
                surrogate_threshold=test.threshold,
                accepted=accepted,
            )
        )
        if not accepted:
            break
        selected.append(best)
        remaining.remove(best)
        current = with_v
    return tuple(selected), trace


# keep pytest from collecting these when imported into test modules
test_mi.__test__ = False
test_delta.__test__ = False
