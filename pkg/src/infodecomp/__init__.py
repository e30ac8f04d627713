"""Unique, redundant and synergistic information of features about a class label."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ClassTooSmall,
    DataError,
    Dataset,
    DecompositionResult,
    DegenerateRadius,
    EstimatorConfig,
    InfoDecompError,
    NonFiniteValue,
    prepare,
    standardize,
    validate,
)
from .decomp import (  # noqa: E402
    aggregate,
    bootstrap_decompose,
    decompose,
    decompose_all,
    simulate_repeats,
)
from .estimator import cmi_pair, compute_counts, final_triplet, mi_standalone  # noqa: E402
from .oracle import GmmSpec, mc_cmi, oracle_decompose, oracle_decompose_all  # noqa: E402
from .scenarios import SCENARIOS, generate  # noqa: E402
from .search import greedy_search, test_mi  # noqa: E402

__all__ = [
    "ClassTooSmall", "DataError", "Dataset", "DecompositionResult", "DegenerateRadius",
    "EstimatorConfig", "GmmSpec", "InfoDecompError", "NonFiniteValue", "SCENARIOS",
    "aggregate", "bootstrap_decompose", "cmi_pair", "compute_counts", "decompose",
    "decompose_all", "final_triplet", "generate", "greedy_search", "mc_cmi",
    "mi_standalone", "oracle_decompose", "oracle_decompose_all", "prepare",
    "simulate_repeats", "standardize", "test_mi", "validate",
]
