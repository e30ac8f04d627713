"""Gaussian-mixture ground truth: densities, Monte-Carlo CMI and exact-score searches."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.special import logsumexp

from .core import (
    KEY_MC,
    InfoDecompError,
    IterationRecord,
    SearchTrace,
    make_result,
    rng_stream,
)
from .search import MAX, MIN

_LOG_2PI = float(np.log(2.0 * np.pi))
_CHUNK = 200_000


class NotPositiveDefinite(InfoDecompError, ValueError):
    pass


class SpecError(InfoDecompError, ValueError):
    pass


def _factor(cov) -> np.ndarray:
    cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    try:
        return cholesky(cov, lower=True)
    except LinAlgError as exc:
        raise NotPositiveDefinite("covariance has no Cholesky factor") from exc


@dataclass
class GmmClass:
    prior: float
    mean: np.ndarray
    cov: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.prior = float(self.prior)
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        self.cov = np.asarray(self.cov, dtype=np.float64)


@dataclass
class GmmSpec:
    """Class priors with per-class Gaussian feature laws."""

    classes: list
    feature_names: tuple = ()
    _chol: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.classes = list(self.classes)
        if not self.classes:
            raise SpecError("spec needs at least one class")
        m = self.classes[0].mean.size
        if not self.feature_names:
            self.feature_names = tuple(f"X{j + 1}" for j in range(m))
        self.feature_names = tuple(self.feature_names)
        if len(self.feature_names) != m:
            raise SpecError("feature_names length differs from the mean dimension")
        for i, c in enumerate(self.classes):
            if not c.label:
                c.label = f"y{i + 1}"
            if c.mean.size != m or c.cov.shape != (m, m):
                raise SpecError(f"class {c.label!r} has inconsistent dimensions")
            if not 0.0 < c.prior <= 1.0:
                raise SpecError(f"class {c.label!r} prior must lie in (0, 1]")
            if not np.array_equal(c.cov, c.cov.T):
                raise SpecError(f"class {c.label!r} covariance is not symmetric")
            _factor(c.cov)
        if abs(sum(c.prior for c in self.classes) - 1.0) > 1e-12:
            raise SpecError("priors must sum to 1")

    @property
    def n_features(self) -> int:
        return self.classes[0].mean.size

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def marginal(self, y: int, subset: Sequence[int]):
        """(mean, lower Cholesky factor) of class ``y`` on ``subset``; cached."""
        key = (y, tuple(subset))
        if key not in self._chol:
            c = self.classes[y]
            idx = list(subset)
            self._chol[key] = (c.mean[idx], _factor(c.cov[np.ix_(idx, idx)]))
        return self._chol[key]

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "classes": [
                {
                    "label": c.label,
                    "prior": c.prior,
                    "mean": c.mean.tolist(),
                    "cov": c.cov.tolist(),
                }
                for c in self.classes
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GmmSpec":
        try:
            classes = [
                GmmClass(c["prior"], c["mean"], c["cov"], str(c.get("label", "")))
                for c in doc["classes"]
            ]
        except (KeyError, TypeError) as exc:
            raise SpecError(f"malformed spec document: {exc}") from exc
        return cls(classes, tuple(doc.get("feature_names", ())))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "GmmSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _logpdf_chol(points, mean, chol) -> np.ndarray:
    diff = np.atleast_2d(points) - mean
    sol = solve_triangular(chol, diff.T, lower=True, check_finite=False)
    d = chol.shape[0]
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    return -0.5 * (np.einsum("ij,ij->j", sol, sol) + d * _LOG_2PI + logdet)


def gaussian_logpdf(point, mean, cov):
    """Multivariate normal log-density through a triangular factor of ``cov``.

    ``point`` may be a single vector or an (n, d) array of rows.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    chol = _factor(cov)
    pts = np.asarray(point, dtype=np.float64).reshape(-1, mean.size)
    out = _logpdf_chol(pts, mean, chol)
    if np.ndim(point) <= 1:
        return float(out[0])
    return out


def _component_logpdfs(spec: GmmSpec, points, subset) -> np.ndarray:
    # (n_classes, n) table of log p(points | y) on ``subset``
    return np.stack([_logpdf_chol(points, *spec.marginal(c, subset))
                     for c in range(spec.n_classes)])


def _log_priors(spec: GmmSpec) -> np.ndarray:
    return np.log([c.prior for c in spec.classes])[:, None]


def gmm_logpdf(spec: GmmSpec, point, subset: Optional[Sequence[int]] = None):
    """Log of the prior-weighted mixture density on ``subset`` (all features by default)."""
    subset = tuple(range(spec.n_features)) if subset is None else tuple(subset)
    pts = np.asarray(point, dtype=np.float64).reshape(-1, len(subset))
    out = logsumexp(_component_logpdfs(spec, pts, subset) + _log_priors(spec), axis=0)
    if np.ndim(point) <= 1:
        return float(out[0])
    return out


def sample_class(spec: GmmSpec, y: int, n: int, seed: int, *key: int) -> np.ndarray:
    """``n`` draws from class ``y`` (standard normals times the Cholesky factor)."""
    c = spec.classes[y]
    chol = spec.marginal(y, range(spec.n_features))[1]
    rng = rng_stream(seed, *(key or (0,)), y)
    return c.mean + rng.standard_normal((n, spec.n_features)) @ chol.T


class Draws:
    """Per-class Monte-Carlo samples shared by every oracle evaluation of one spec.

    Reusing the same draws across conditioning sets (common random numbers)
    keeps differences between CMI values far less noisy than the values.
    """

    def __init__(self, spec: GmmSpec, n_mc: int, seed: int = 0):
        self.spec = spec
        self.n_mc = int(n_mc)
        self.seed = int(seed)
        self.samples = [sample_class(spec, y, self.n_mc, seed, KEY_MC)
                        for y in range(spec.n_classes)]


def _log_ratio_mean(spec, pts, y, joint, cond):
    # E[log p(cond) + log p(joint|y) - log p(joint) - log p(cond|y)] over pts from class y
    lp = _log_priors(spec)
    total = 0.0
    for lo in range(0, pts.shape[0], _CHUNK):
        chunk = pts[lo:lo + _CHUNK]
        comp_j = _component_logpdfs(spec, chunk[:, joint], joint)
        vals = comp_j[y] - logsumexp(comp_j + lp, axis=0)
        if cond:
            comp_c = _component_logpdfs(spec, chunk[:, cond], cond)
            vals += logsumexp(comp_c + lp, axis=0) - comp_c[y]
        total += vals.sum()
    return total / pts.shape[0]


def mc_cmi(spec: GmmSpec, x: int, z=(), n_mc: int = 10**6, seed: int = 0,
           draws: Optional[Draws] = None) -> float:
    """Monte-Carlo I(Y;X|Z) in nats; ``z`` empty gives I(Y;X)."""
    z = tuple(int(c) for c in z)
    if x in z:
        raise ValueError("x must not be in z")
    if draws is None:
        draws = Draws(spec, n_mc, seed)
    joint = [x] + list(z)
    return float(sum(
        spec.classes[y].prior * _log_ratio_mean(spec, draws.samples[y], y, joint, list(z))
        for y in range(spec.n_classes)
    ))


def mc_mi(spec: GmmSpec, subset, n_mc: int = 10**6, seed: int = 0,
          draws: Optional[Draws] = None) -> float:
    """Monte-Carlo I(Y; subset) in nats."""
    subset = [int(c) for c in subset]
    if not subset:
        return 0.0
    if draws is None:
        draws = Draws(spec, n_mc, seed)
    return float(sum(
        spec.classes[y].prior * _log_ratio_mean(spec, draws.samples[y], y, subset, [])
        for y in range(spec.n_classes)
    ))


class _Scorer:
    def __init__(self, spec, draws):
        self.spec, self.draws, self.memo = spec, draws, {}

    def __call__(self, x, z):
        key = (x, frozenset(z))
        if key not in self.memo:
            self.memo[key] = mc_cmi(self.spec, x, tuple(sorted(z)), draws=self.draws)
        return self.memo[key]


def _exact_search(score, x, m, direction, tol):
    remaining = [j for j in range(m) if j != x]
    selected: list = []
    trace = SearchTrace()
    current = score(x, ())
    sign = 1.0 if direction == MIN else -1.0
    while remaining:
        scores = {v: score(x, selected + [v]) for v in remaining}
        best = min(remaining, key=lambda v: (sign * scores[v], v))
        change = sign * (current - scores[best])
        accepted = change > tol
        trace.iterations.append(IterationRecord(
            candidate_scores=scores, selected=best, cmi_before=current,
            cmi_after=scores[best] if accepted else current, observed=change,
            surrogate_threshold=tol, accepted=accepted,
        ))
        if not accepted:
            break
        selected.append(best)
        remaining.remove(best)
        current = scores[best]
    return tuple(selected), trace


def oracle_decompose(spec: GmmSpec, x: int, tol: float = 1e-3, n_mc: int = 10**6,
                     seed: int = 0, draws: Optional[Draws] = None, _scorer=None):
    """Greedy min/max searches scored by Monte-Carlo CMI with a fixed acceptance margin.

    A candidate enters a set only when it moves the CMI by more than ``tol``
    in the search direction. The min search is skipped when I(Y;X) ≤ tol.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if draws is None:
        draws = Draws(spec, n_mc, seed)
    score = _scorer or _Scorer(spec, draws)
    m = spec.n_features
    mi = score(x, ())
    gate = mi > tol
    if gate:
        zmin, trace_min = _exact_search(score, x, m, MIN, tol)
    else:
        zmin, trace_min = (), SearchTrace()
    zmax, trace_max = _exact_search(score, x, m, MAX, tol)
    return make_result(x, mi, gate, score(x, zmin), score(x, zmax), zmin, zmax,
                       trace_min, trace_max)


def oracle_decompose_all(spec: GmmSpec, tol: float = 1e-3, n_mc: int = 10**6,
                         seed: int = 0) -> list:
    """Oracle decomposition of every feature, sharing draws and the CMI memo."""
    draws = Draws(spec, n_mc, seed)
    score = _Scorer(spec, draws)
    return [oracle_decompose(spec, x, tol, draws=draws, _scorer=score)
            for x in range(spec.n_features)]
