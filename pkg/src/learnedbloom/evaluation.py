"""False positive rates, concentration experiments, and size comparisons.

Measures empirical false positive rates on sampled workloads, predicts
them from the above-threshold query mass (alpha) composed with the
backup filter's rate, computes alpha exactly by enumerating finite
integer supports, and runs the two concentration experiments: test-set
vs query-set rate agreement, and fill-ratio concentration for standard
filters.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .bloom import BloomFilter, expected_fill_ratio, expected_fpp, params_for_target
from .errors import OracleUnavailableError, ParameterError, WorkloadError
from .hashing import derive_seed
from .learned import LearnedBloomFilter
from .scorers import Scorer
from .workloads import (
    FixedSet,
    Mixture,
    QueryDistribution,
    UniformRange,
    sample,
)

SUPPORT_LIMIT = 10**7  # largest support exact enumeration will walk
_CHUNK = 1 << 20


@dataclass(frozen=True)
class EvalReport:
    """Measured vs predicted false positive rate for one filter and workload."""

    empirical_fpr: float
    sample_count: int
    alpha_estimate: float
    backup_fpr_estimate: float
    model_fpr: float
    binomial_std_err: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.empirical_fpr <= 1.0:
            raise ParameterError("empirical_fpr must lie in [0, 1]")
        composed = self.alpha_estimate + (1.0 - self.alpha_estimate) * self.backup_fpr_estimate
        if abs(self.model_fpr - composed) > 1e-12:
            raise ParameterError("model_fpr must equal alpha + (1 - alpha) * backup_fpr")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ConcentrationReport:
    """Empirical exceedance of |X - Y| >= epsilon against the Chernoff-style bound."""

    epsilon: float
    trials: int
    exceed_fraction: float
    theorem_bound: float
    t_size: int
    q_size: int
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.exceed_fraction <= 1.0:
            raise ParameterError("exceed_fraction must lie in [0, 1]")
        stated = theorem_bound(self.epsilon, self.t_size, self.q_size)
        if abs(self.theorem_bound - stated) > 1e-12 * max(stated, 1.0):
            raise ParameterError("theorem_bound must equal 2e^(-eps^2 t/4) + 2e^(-eps^2 q/4)")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FillConcentrationReport:
    """How often the realized fill ratio strays from its expectation by >= gamma."""

    gamma: float
    trials: int
    exceed_fraction: float
    expected_fill: float
    mean_fill: float
    m: int
    k: int
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ComparisonReport:
    """Learned filter vs a standard filter sized at the learned filter's measured rate."""

    learned_fpr: float
    standard_fpr: float
    learned_total_bits: int
    scorer_bits: int
    backup_bits: int
    backup_keys: int
    standard_bits: int
    standard_k: int
    key_count: int
    learned_bits_per_key: float
    standard_bits_per_key: float
    backup_bits_per_stored_key: float
    standard_target_fpp: float
    sample_count: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def empirical_fpr(filt, queries) -> float:
    """Fraction of positive answers over queries known to be non-members."""
    queries = np.atleast_1d(np.asarray(queries))
    if queries.size == 0:
        raise ParameterError("query list must be nonempty")
    if hasattr(filt, "contains_many"):
        answers = np.asarray(filt.contains_many(queries), dtype=bool)
    else:
        answers = np.fromiter((filt.contains(q) for q in queries), dtype=bool)
    return float(answers.mean())


def model_fpr(alpha: float, backup_fpr: float) -> float:
    """Composite rate: alpha + (1 - alpha) * backup_fpr."""
    if not 0.0 <= alpha <= 1.0 or not 0.0 <= backup_fpr <= 1.0:
        raise ParameterError("alpha and backup_fpr must lie in [0, 1]")
    return alpha + (1.0 - alpha) * backup_fpr


def _range_counts(
    scorer: Scorer, tau: float, lo: int, hi: int, exclusion: frozenset
) -> tuple[int, int]:
    """(# eligible keys scoring >= tau, # eligible keys) for integers in [lo, hi)."""
    above = 0
    eligible = 0
    excl = np.sort(np.fromiter(exclusion, dtype=np.uint64, count=len(exclusion)))
    for start in range(lo, hi, _CHUNK):
        block = np.arange(start, min(start + _CHUNK, hi), dtype=np.uint64)
        if excl.size:
            block = block[~np.isin(block, excl)]
        if block.size == 0:
            continue
        eligible += int(block.size)
        above += int((scorer.score_batch(block) >= tau).sum())
    return above, eligible


def _source_counts(scorer: Scorer, tau: float, source, exclusion) -> tuple[int, int]:
    """(# eligible keys scoring >= tau, # eligible keys) within one component."""
    if isinstance(source, UniformRange):
        return _range_counts(scorer, tau, source.lo, source.hi, exclusion)
    keys = np.array(source.keys, dtype=np.uint64)
    if exclusion:
        excl = np.sort(np.fromiter(exclusion, dtype=np.uint64, count=len(exclusion)))
        keys = keys[~np.isin(keys, excl)]
    if keys.size == 0:
        return 0, 0
    return int((scorer.score_batch(keys) >= tau).sum()), int(keys.size)


def exact_alpha(
    scorer: Scorer, tau: float, dist: QueryDistribution, support_limit: int = SUPPORT_LIMIT
) -> Fraction:
    """Exact Pr(score >= tau) under the distribution, by support enumeration.

    Returns the exact rational: above-threshold eligible count over eligible
    count for uniform and fixed-set supports, the weighted analogue for
    mixtures.  Raises OracleUnavailableError when the support exceeds
    ``support_limit``; callers should then fall back to sampling.
    """
    source = dist.source
    if isinstance(source, (UniformRange, FixedSet)):
        if source.size > support_limit:
            raise OracleUnavailableError(
                f"support of {source.size} exceeds the enumeration limit {support_limit}"
            )
        above, eligible = _source_counts(scorer, tau, source, dist.exclusion)
        if eligible == 0:
            raise WorkloadError("exclusion removes the whole support")
        return Fraction(above, eligible)
    if isinstance(source, Mixture):
        total_size = sum(component.size for component in source.components)
        if total_size > support_limit:
            raise OracleUnavailableError(
                f"support of {total_size} exceeds the enumeration limit {support_limit}"
            )
        above_mass = Fraction(0)
        eligible_mass = Fraction(0)
        for component, weight in zip(source.components, source.weights):
            above, eligible = _source_counts(scorer, tau, component, dist.exclusion)
            w = Fraction(weight)
            above_mass += w * Fraction(above, component.size)
            eligible_mass += w * Fraction(eligible, component.size)
        if eligible_mass == 0:
            raise WorkloadError("exclusion removes the whole support")
        return above_mass / eligible_mass
    raise ParameterError(f"unknown distribution source {type(source).__name__}")


def backup_fpr_estimate(lbf: LearnedBloomFilter, mode: str = "fill") -> float:
    """Backup filter rate: realized fill ratio^k ("fill") or the closed-form expectation."""
    if mode == "fill":
        return lbf.backup.fill_ratio ** lbf.backup.k
    if mode == "expected":
        stored = lbf.below_threshold_count + lbf.inserted_after_build
        return expected_fpp(stored, lbf.backup.m, lbf.backup.k)
    raise ParameterError(f"unknown backup fpr mode {mode!r}")


def evaluate(
    lbf: LearnedBloomFilter,
    dist: QueryDistribution,
    samples: int,
    rng_seed: int,
    backup_fpr_mode: str = "fill",
) -> EvalReport:
    """Measure the empirical rate on a sampled workload and the model prediction."""
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    queries = sample(dist, samples, rng_seed)
    scores = lbf.scorer.score_batch(queries)
    above = scores >= lbf.tau
    answers = above.copy()
    pending = ~above
    if pending.any():
        answers[pending] = lbf.backup.contains_many(queries[pending])
    alpha = float(above.mean())
    backup_rate = backup_fpr_estimate(lbf, backup_fpr_mode)
    predicted = model_fpr(alpha, backup_rate)
    return EvalReport(
        empirical_fpr=float(answers.mean()),
        sample_count=samples,
        alpha_estimate=alpha,
        backup_fpr_estimate=backup_rate,
        model_fpr=predicted,
        binomial_std_err=math.sqrt(max(predicted * (1.0 - predicted), 0.0) / samples),
        seed=rng_seed,
    )


def theorem_bound(epsilon: float, t_size: int, q_size: int) -> float:
    """2 e^(-eps^2 t / 4) + 2 e^(-eps^2 q / 4)."""
    return 2.0 * math.exp(-(epsilon**2) * t_size / 4.0) + 2.0 * math.exp(
        -(epsilon**2) * q_size / 4.0
    )


def concentration_experiment(
    lbf,
    dist: QueryDistribution,
    t_size: int,
    q_size: int,
    epsilon: float,
    trials: int,
    rng_seed: int,
) -> ConcentrationReport:
    """Per trial, draw independent test/query sets and compare their empirical rates.

    Both sets are sampled with replacement from the same distribution; the
    report pairs the observed exceedance fraction of |X - Y| >= epsilon with
    the explicit two-sided bound.
    """
    if not 0.0 < epsilon < 1.0:
        raise ParameterError("epsilon must lie in (0, 1)")
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if t_size < 1 or q_size < 1:
        raise ParameterError("t_size and q_size must be >= 1")
    exceed = 0
    for trial in range(trials):
        t_set = sample(dist, t_size, derive_seed(rng_seed, f"T{trial}"))
        q_set = sample(dist, q_size, derive_seed(rng_seed, f"Q{trial}"))
        x = empirical_fpr(lbf, t_set)
        y = empirical_fpr(lbf, q_set)
        if abs(x - y) >= epsilon:
            exceed += 1
    return ConcentrationReport(
        epsilon=float(epsilon),
        trials=trials,
        exceed_fraction=exceed / trials,
        theorem_bound=theorem_bound(epsilon, t_size, q_size),
        t_size=t_size,
        q_size=q_size,
        seed=rng_seed,
    )


def _distinct_keys(rng: np.random.Generator, n: int) -> np.ndarray:
    keys = rng.integers(0, 1 << 64, size=n, dtype=np.uint64)
    while np.unique(keys).size < n:  # vanishing probability, kept for exactness
        keys = np.unique(keys)
        extra = rng.integers(0, 1 << 64, size=n - keys.size, dtype=np.uint64)
        keys = np.concatenate([keys, extra])
    return keys


def fill_concentration_experiment(
    m: int, k: int, n: int, gamma: float, seeds
) -> FillConcentrationReport:
    """One filter per seed with n distinct random keys; how often |fill - E] >= gamma."""
    seeds = list(seeds)
    if len(seeds) < 30:
        raise ParameterError("need at least 30 seeds")
    if not gamma > 0:
        raise ParameterError("gamma must be positive")
    expected = expected_fill_ratio(n, m, k)
    exceed = 0
    fills = []
    for seed in seeds:
        filt = BloomFilter(m, k, seed)
        if n:
            rng = np.random.default_rng(derive_seed(seed, "fill-keys"))
            filt.insert_many(_distinct_keys(rng, n))
        fills.append(filt.fill_ratio)
        if abs(filt.fill_ratio - expected) >= gamma:
            exceed += 1
    return FillConcentrationReport(
        gamma=float(gamma),
        trials=len(seeds),
        exceed_fraction=exceed / len(seeds),
        expected_fill=expected,
        mean_fill=float(np.mean(fills)),
        m=m,
        k=k,
        n=n,
    )


def compare_with_standard(
    keys, lbf: LearnedBloomFilter, dist: QueryDistribution, samples: int, rng_seed: int
) -> ComparisonReport:
    """Measure the learned filter, then size a standard filter to that rate.

    The standard filter holds every key and targets the learned filter's
    measured rate (clamped away from 0 when no false positive was observed),
    so the report compares total bits at matched accuracy.
    """
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    keys = np.asarray(list(keys), dtype=np.uint64)
    if keys.size == 0:
        raise ParameterError("key set must be nonempty")
    learned_rate = empirical_fpr(lbf, sample(dist, samples, derive_seed(rng_seed, "learned-eval")))
    target = min(max(learned_rate, 1.0 / samples), 0.999)
    params = params_for_target(int(keys.size), target)
    standard = BloomFilter.from_params(params, derive_seed(rng_seed, "standard-filter"))
    standard.insert_many(keys)
    standard_rate = empirical_fpr(
        standard, sample(dist, samples, derive_seed(rng_seed, "standard-eval"))
    )
    stored = lbf.below_threshold_count + lbf.inserted_after_build
    return ComparisonReport(
        learned_fpr=learned_rate,
        standard_fpr=standard_rate,
        learned_total_bits=lbf.size_bits(),
        scorer_bits=lbf.scorer.size_bits(),
        backup_bits=lbf.backup.m,
        backup_keys=stored,
        standard_bits=params.m,
        standard_k=params.k,
        key_count=int(keys.size),
        learned_bits_per_key=lbf.size_bits() / keys.size,
        standard_bits_per_key=params.m / keys.size,
        backup_bits_per_stored_key=lbf.backup.m / stored if stored else math.inf,
        standard_target_fpp=target,
        sample_count=samples,
        seed=rng_seed,
    )
