"""Membership filters and an evaluation harness for learned Bloom filters."""

from .bloom import (
    BloomFilter,
    FilterParams,
    expected_fill_ratio,
    expected_fpp,
    params_for_target,
)
from .errors import (
    FilterFormatError,
    OracleUnavailableError,
    ParameterError,
    TrainingError,
    WorkloadError,
)
from .evaluation import (
    ComparisonReport,
    ConcentrationReport,
    EvalReport,
    FillConcentrationReport,
    backup_fpr_estimate,
    compare_with_standard,
    concentration_experiment,
    empirical_fpr,
    evaluate,
    exact_alpha,
    fill_concentration_experiment,
    model_fpr,
    theorem_bound,
)
from .hashing import derive_seed, encode_key
from .learned import LearnedBloomFilter, SweepPoint, threshold_sweep
from .scorers import (
    IntervalScorer,
    LogisticScorer,
    Scorer,
    TrainingSet,
    feature_map,
    log_loss,
    scorer_from_text,
    scorer_to_text,
    train_logistic,
)
from .workloads import (
    FixedSet,
    HotRangeExample,
    Mixture,
    QueryDistribution,
    UniformRange,
    hot_range_example,
    sample,
    uniform_queries,
)

__version__ = "0.1.0"

__all__ = [
    "BloomFilter",
    "ComparisonReport",
    "ConcentrationReport",
    "EvalReport",
    "FillConcentrationReport",
    "FilterFormatError",
    "FilterParams",
    "FixedSet",
    "HotRangeExample",
    "IntervalScorer",
    "LearnedBloomFilter",
    "LogisticScorer",
    "Mixture",
    "OracleUnavailableError",
    "ParameterError",
    "QueryDistribution",
    "Scorer",
    "SweepPoint",
    "TrainingError",
    "TrainingSet",
    "UniformRange",
    "WorkloadError",
    "backup_fpr_estimate",
    "compare_with_standard",
    "concentration_experiment",
    "derive_seed",
    "empirical_fpr",
    "encode_key",
    "evaluate",
    "exact_alpha",
    "expected_fill_ratio",
    "expected_fpp",
    "feature_map",
    "fill_concentration_experiment",
    "hot_range_example",
    "log_loss",
    "model_fpr",
    "params_for_target",
    "sample",
    "scorer_from_text",
    "scorer_to_text",
    "theorem_bound",
    "threshold_sweep",
    "train_logistic",
    "uniform_queries",
]
