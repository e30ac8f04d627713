"""Seeded synthetic benchmarks with known structure."""
from __future__ import annotations

import numpy as np

from .core import KEY_NONGAUSS, KEY_SAMPLE, Dataset, rng_stream
from .oracle import GmmClass, GmmSpec, sample_class


def _two_class(mean1, mean2, cov1, cov2) -> GmmSpec:
    return GmmSpec([GmmClass(0.5, mean1, cov1, "y1"), GmmClass(0.5, mean2, cov2, "y2")])


def unique_spec() -> GmmSpec:
    """X1 shifts its mean with the class; X2 is class-independent noise."""
    eye = np.eye(2)
    return _two_class([1.0, 1.0], [-1.0, 1.0], eye, eye)


def synergy_spec() -> GmmSpec:
    """Zero means; the class flips the sign of the X1-X2 correlation."""
    return _two_class([0.0, 0.0], [0.0, 0.0],
                      [[1.0, 0.5], [0.5, 1.0]], [[1.0, -0.5], [-0.5, 1.0]])


def redundancy_spec() -> GmmSpec:
    """Both features carry the same mean shift and are almost collinear."""
    cov = [[1.0, 0.99], [0.99, 1.0]]
    return _two_class([1.0, 1.0], [-1.0, -1.0], cov, cov)


def mixed6_spec() -> GmmSpec:
    """Six features mixing unique, redundant, synergistic and null roles."""
    mean = np.array([1.0, 0.5, 0.5, 0.0, 1.0, 0.0])
    covs = []
    for sign in (1.0, -1.0):
        cov = np.eye(6)
        cov[1, 2] = cov[2, 1] = 0.25
        cov[3, 4] = cov[4, 3] = 0.5 * sign
        covs.append(cov)
    return _two_class(mean, -mean, covs[0], covs[1])


def sample_spec(spec: GmmSpec, n_per_class: int, seed: int) -> Dataset:
    """Draw ``n_per_class`` rows from each class, class after class."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be positive")
    blocks = [sample_class(spec, y, n_per_class, seed, KEY_SAMPLE)
              for y in range(spec.n_classes)]
    labels = np.repeat(np.arange(spec.n_classes), n_per_class)
    return Dataset(np.vstack(blocks), labels, spec.feature_names,
                   tuple(c.label for c in spec.classes))


def gen_unique(n_per_class: int, seed: int):
    spec = unique_spec()
    return sample_spec(spec, n_per_class, seed), spec


def gen_synergy(n_per_class: int, seed: int):
    spec = synergy_spec()
    return sample_spec(spec, n_per_class, seed), spec


def gen_redundancy(n_per_class: int, seed: int):
    spec = redundancy_spec()
    return sample_spec(spec, n_per_class, seed), spec


def gen_mixed6(n_per_class: int, seed: int):
    spec = mixed6_spec()
    return sample_spec(spec, n_per_class, seed), spec


def heaviside(u):
    """1 where u > 0, else 0 (so the step at exactly 0 is 0)."""
    return (np.asarray(u) > 0).astype(np.int64)


def gen_nongauss(n_total: int, seed: int) -> Dataset:
    """Uniform features with Y = step(X1*X2) + step(X3) + step(X4).

    X5 is X4 plus standard normal noise and X6 is independent uniform noise.
    """
    if n_total < 1:
        raise ValueError("n_total must be positive")
    rng = rng_stream(seed, KEY_NONGAUSS)
    u = rng.uniform(-1.0, 1.0, size=(n_total, 4))
    noise = rng.standard_normal(n_total)
    x6 = rng.uniform(-1.0, 1.0, size=n_total)
    y = heaviside(u[:, 0] * u[:, 1]) + heaviside(u[:, 2]) + heaviside(u[:, 3])
    features = np.column_stack([u, u[:, 3] + noise, x6])
    present = np.unique(y)
    index = np.searchsorted(present, y)
    return Dataset(features, index, tuple(f"X{j + 1}" for j in range(6)),
                   tuple(str(v) for v in present))


GAUSSIAN = {
    "unique": gen_unique,
    "synergy": gen_synergy,
    "redundancy": gen_redundancy,
    "mixed6": gen_mixed6,
}
SCENARIOS = tuple(GAUSSIAN) + ("nongauss",)


def generate(name: str, n_per_class: int, seed: int):
    """(dataset, spec or None) for a scenario name.

    For ``nongauss`` the sample size is ``n_per_class`` rows in total, since
    its classes are not sampled separately.
    """
    if name in GAUSSIAN:
        return GAUSSIAN[name](n_per_class, seed)
    if name == "nongauss":
        return gen_nongauss(n_per_class, seed), None
    raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
