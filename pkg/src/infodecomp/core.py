"""Shared data model: datasets, configuration, result records and seed streams."""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np


class InfoDecompError(Exception):
    """Base class for all errors raised by this package."""


class DataError(InfoDecompError):
    """Problem with the input data; the CLI maps these to exit code 2."""


class NonFiniteValue(DataError):
    def __init__(self, row: int, col: int):
        self.row, self.col = row, col
        super().__init__(f"non-finite feature value at row {row}, column {col}")


class ClassTooSmall(DataError):
    def __init__(self, cls, n_y: int, k: int):
        self.cls, self.n_y, self.k = cls, n_y, k
        super().__init__(
            f"class {cls!r} has {n_y} samples; at least k+1 = {k + 1} are required"
        )


class EmptyAlphabet(DataError):
    def __init__(self):
        super().__init__("dataset has no class labels")


class DegenerateRadius(DataError):
    """Raised when a sample has k same-class duplicates (zero search radius)."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(
            f"sample {row} has a zero k-th neighbor distance (duplicated rows); "
            "apply jitter before estimation"
        )


class DomainError(InfoDecompError, ValueError):
    pass


# stream keys; every random draw in the package goes through rng_stream
KEY_JITTER = 1
KEY_MI_TEST = 2
KEY_DELTA_MIN = 3
KEY_DELTA_MAX = 4
KEY_SAMPLE = 5
KEY_BOOTSTRAP = 6
KEY_REPEAT = 7
KEY_NONGAUSS = 8
KEY_MC = 9


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``; order of creation is irrelevant."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def name_key(name: str) -> int:
    """Stable integer key of a feature name (used to derive per-source streams)."""
    return zlib.crc32(name.encode("utf-8"))


@dataclass(frozen=True, eq=False)
class Dataset:
    """N samples of m continuous features and one discrete class column.

    ``labels`` holds indices into ``class_alphabet`` (first-appearance order).
    ``constant_columns`` lists columns flagged as zero-variance by
    :func:`standardize`.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple
    class_alphabet: tuple
    constant_columns: tuple = ()
    _orders: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        lab = np.asarray(self.labels, dtype=np.int64)
        if f.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if lab.shape != (f.shape[0],):
            raise ValueError("labels must have one entry per sample")
        if len(self.feature_names) != f.shape[1]:
            raise ValueError("feature_names must have one entry per column")
        # never freeze a caller's writable buffer in place
        if f is self.features and f.flags.writeable:
            f = f.copy()
        f.setflags(write=False)
        if lab is self.labels and lab.flags.writeable:
            lab = lab.copy()
        lab.setflags(write=False)
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "class_alphabet", tuple(self.class_alphabet))
        # sort orders are derived data; every new dataset starts without them
        object.__setattr__(self, "_orders", {})

    @classmethod
    def from_arrays(cls, features, labels, feature_names: Optional[Sequence[str]] = None):
        """Build a dataset from raw labels of any hashable type."""
        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 1:
            features = features[:, None]
        raw = [str(v) for v in np.asarray(labels).tolist()]
        alphabet: dict = {}
        for v in raw:
            alphabet.setdefault(v, len(alphabet))
        idx = np.array([alphabet[v] for v in raw], dtype=np.int64)
        if feature_names is None:
            feature_names = [f"X{j + 1}" for j in range(features.shape[1])]
        return cls(features, idx, tuple(feature_names), tuple(alphabet))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_alphabet)

    @property
    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def column_order(self, j: int) -> np.ndarray:
        """Row indices sorting column ``j`` (cached; read-only)."""
        order = self._orders.get(j)
        if order is None:
            order = np.argsort(self.features[:, j], kind="stable")
            order.setflags(write=False)
            self._orders[j] = order
        return order

    def with_column(self, j: int, values: np.ndarray) -> "Dataset":
        f = self.features.copy()
        f[:, j] = values
        return replace(self, features=f)

    def permute_column(self, j: int, perm: np.ndarray) -> "Dataset":
        """Copy with column ``j`` replaced by ``column[perm]``; other cached orders carry over."""
        out = replace(self)
        f = self.features.copy()
        f[:, j] = self.features[perm, j]
        f.setflags(write=False)
        object.__setattr__(out, "features", f)
        orders = {c: o for c, o in self._orders.items() if c != j}
        if j in self._orders:
            inverse = np.empty_like(perm)
            inverse[perm] = np.arange(perm.size)
            moved = inverse[self._orders[j]]
            moved.setflags(write=False)
            orders[j] = moved
        object.__setattr__(out, "_orders", orders)
        return out

    def take(self, rows: np.ndarray) -> "Dataset":
        return replace(self, features=self.features[rows], labels=self.labels[rows])

    def select(self, columns: Sequence[int]) -> "Dataset":
        columns = list(columns)
        return replace(
            self,
            features=self.features[:, columns],
            feature_names=tuple(self.feature_names[j] for j in columns),
            constant_columns=tuple(
                columns.index(j) for j in self.constant_columns if j in columns
            ),
        )


@dataclass(frozen=True)
class EstimatorConfig:
    k: int = 10
    n_surrogates: int = 100
    alpha: float = 0.05
    seed: int = 0
    standardize: bool = True
    jitter_scale: float = 1e-10
    mc_samples: int = 10**6

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.n_surrogates < 19:
            raise ValueError("n_surrogates must be at least 19")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 0.0 <= self.jitter_scale < 1e-6:
            raise ValueError("jitter_scale must lie in [0, 1e-6)")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be positive")

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "n_surrogates": self.n_surrogates,
            "alpha": self.alpha,
            "seed": self.seed,
            "standardize": self.standardize,
            "jitter_scale": self.jitter_scale,
            "mc_samples": self.mc_samples,
        }


@dataclass
class IterationRecord:
    """One step of a greedy search.

    ``cmi_before`` is the CMI carried over from the previous accepted step
    (for the first step, the no-candidate value from the selected
    candidate's shared-radius evaluation). ``observed`` is the tested
    one-sided change.
    """

    candidate_scores: dict
    selected: Optional[int]
    cmi_before: float
    cmi_after: float
    observed: float
    surrogate_threshold: float
    accepted: bool

    def to_dict(self) -> dict:
        return {
            "candidate_scores": {str(k): v for k, v in self.candidate_scores.items()},
            "selected": self.selected,
            "cmi_before": self.cmi_before,
            "cmi_after": self.cmi_after,
            "observed": self.observed,
            "surrogate_threshold": self.surrogate_threshold,
            "accepted": self.accepted,
        }


@dataclass
class SearchTrace:
    iterations: list = field(default_factory=list)

    @property
    def selected(self) -> tuple:
        return tuple(r.selected for r in self.iterations if r.accepted)

    def to_dict(self) -> list:
        return [r.to_dict() for r in self.iterations]


@dataclass
class DecompositionResult:
    source_index: int
    mi: float
    mi_significant: bool
    cmi_zmin: float
    cmi_zmax: float
    unique: float
    redundant: float
    synergistic: float
    zmin: tuple
    zmax: tuple
    trace_min: SearchTrace = field(default_factory=SearchTrace)
    trace_max: SearchTrace = field(default_factory=SearchTrace)

    def to_dict(self, feature_names=None) -> dict:
        def name(j):
            return feature_names[j] if feature_names is not None else j

        return {
            "source": name(self.source_index),
            "source_index": self.source_index,
            "mi": self.mi,
            "mi_significant": self.mi_significant,
            "cmi_zmin": self.cmi_zmin,
            "cmi_zmax": self.cmi_zmax,
            "unique": self.unique,
            "redundant": self.redundant,
            "synergistic": self.synergistic,
            "zmin": [name(j) for j in self.zmin],
            "zmax": [name(j) for j in self.zmax],
            "trace_min": self.trace_min.to_dict(),
            "trace_max": self.trace_max.to_dict(),
        }


# Components are snapped to this grid so that every sum and difference of
# them is exact in binary64 (|values| stay far below 2**12).
_GRID = 2.0**40


def snap(value: float) -> float:
    return float(np.round(value * _GRID) / _GRID)


def make_result(source, mi, mi_significant, cmi_zmin, cmi_zmax, zmin, zmax,
                trace_min=None, trace_max=None) -> DecompositionResult:
    """Assemble a result whose U/R/S identities hold bit-exactly."""
    mi, cmi_zmin, cmi_zmax = snap(mi), snap(cmi_zmin), snap(cmi_zmax)
    return DecompositionResult(
        source_index=int(source),
        mi=mi,
        mi_significant=bool(mi_significant),
        cmi_zmin=cmi_zmin,
        cmi_zmax=cmi_zmax,
        unique=cmi_zmin,
        redundant=mi - cmi_zmin,
        synergistic=cmi_zmax - mi,
        zmin=tuple(int(j) for j in zmin),
        zmax=tuple(int(j) for j in zmax),
        trace_min=trace_min if trace_min is not None else SearchTrace(),
        trace_max=trace_max if trace_max is not None else SearchTrace(),
    )


def validate(dataset: Dataset, config: EstimatorConfig) -> Dataset:
    """Check the dataset invariants for neighbor count ``config.k``."""
    if dataset.n_classes == 0 or dataset.n_samples == 0:
        raise EmptyAlphabet()
    if dataset.n_samples < 2 or dataset.n_features < 1:
        raise ValueError("need at least 2 samples and 1 feature")
    bad = ~np.isfinite(dataset.features)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise NonFiniteValue(int(row), int(col))
    counts = dataset.class_counts
    if dataset.labels.min() < 0 or dataset.labels.max() >= dataset.n_classes:
        raise ValueError("label index outside the class alphabet")
    for cls, n_y in zip(dataset.class_alphabet, counts):
        if n_y <= config.k:
            raise ClassTooSmall(cls, int(n_y), config.k)
    return dataset


def standardize(dataset: Dataset) -> Dataset:
    """Z-score every column (population SD); constant columns are centered and flagged."""
    f = dataset.features
    mean = f.mean(axis=0)
    sd = f.std(axis=0)
    constant = tuple(int(j) for j in np.flatnonzero(sd == 0))
    scale = np.where(sd == 0, 1.0, sd)
    return replace(dataset, features=(f - mean) / scale, constant_columns=constant)


def jitter(dataset: Dataset, config: EstimatorConfig, *key: int) -> Dataset:
    """Add uniform noise of half-width ``jitter_scale * SD`` to each column."""
    if config.jitter_scale == 0:
        return dataset
    rng = rng_stream(config.seed, KEY_JITTER, *key)
    half = config.jitter_scale * dataset.features.std(axis=0)
    noise = rng.uniform(-1.0, 1.0, size=dataset.features.shape) * half
    return replace(dataset, features=dataset.features + noise)


def prepare(dataset: Dataset, config: EstimatorConfig, *key: int) -> Dataset:
    """Validate, then standardize and jitter according to ``config``."""
    validate(dataset, config)
    if config.standardize:
        dataset = standardize(dataset)
    return jitter(dataset, config, *key)
