"""End-to-end reproduction of the hot-range worked example.

Builds the 1000-key dataset and its learned filter, evaluates it under
full-range and restricted-range query distributions, compares sizes
against standard filters, and lines the derived numbers up against the
originally reported figures, flagging any that do not reproduce.

Every random draw is seeded from one top-level seed via
:func:`learnedbloom.hashing.derive_seed`, so reports are byte-identical
across runs (they contain no timestamps).
"""

from __future__ import annotations

import math
from fractions import Fraction

from .bloom import BloomFilter, params_for_target
from .evaluation import (
    backup_fpr_estimate,
    empirical_fpr,
    evaluate,
    exact_alpha,
    model_fpr,
)
from .hashing import derive_seed
from .learned import LearnedBloomFilter
from .workloads import hot_range_example, sample

REPORT_SCHEMA = "learnedbloom-report/1"

# Figures as originally reported for this worked example.
REPORTED_ALPHA_FULL = 0.0002
REPORTED_FPR_FULL = 0.0004
REPORTED_FPR_RESTRICTED = 0.0022
REPORTED_EXTRA_BITS = 1.5
REPORTED_BACKUP_KEYS = 500


def _fraction_dict(value: Fraction) -> dict:
    return {"fraction": f"{value.numerator}/{value.denominator}", "value": float(value)}


def build_report(
    seed: int,
    full_samples: int = 1_000_000,
    restricted_samples: int = 200_000,
    backup_target_fpp: float = 0.0002,
    restricted_hi: int = 100_000,
) -> dict:
    """Run the full pipeline and return a JSON-compatible report dict."""
    example, scorer, tau = hot_range_example(derive_seed(seed, "dataset"))
    keys = example.keys

    scores_below = sum(1 for k in keys if scorer.score(k) < tau)
    backup_params = params_for_target(max(scores_below, 1), backup_target_fpp)
    lbf = LearnedBloomFilter.build(
        keys, scorer, tau, backup_params, derive_seed(seed, "backup-filter")
    )

    full = example.full_range_queries()
    restricted = example.restricted_range_queries(restricted_hi)
    alpha_full = exact_alpha(scorer, tau, full)
    alpha_restricted = exact_alpha(scorer, tau, restricted)

    eval_full = evaluate(lbf, full, full_samples, derive_seed(seed, "eval-full"))
    eval_restricted = evaluate(
        lbf, restricted, restricted_samples, derive_seed(seed, "eval-restricted")
    )

    backup_rate = backup_fpr_estimate(lbf)
    model_full = model_fpr(float(alpha_full), backup_rate)
    model_restricted = model_fpr(float(alpha_restricted), backup_rate)

    # Size comparison at matched accuracy: the backup holds the 500 missed
    # keys at backup_target_fpp; the baseline holds all 1000 keys at twice
    # that rate, mirroring the reported configuration.
    standard_params = params_for_target(len(keys), 2.0 * backup_target_fpp)
    backup_bpe = lbf.backup.m / max(lbf.below_threshold_count, 1)
    standard_bpe = standard_params.m / len(keys)
    delta_formula = 1.0 / math.log(2.0)  # log2(2eps/eps) / ln 2 per element

    # A standard filter over the same keys, measured under both query
    # distributions: its rate should not depend on the distribution.
    reference = BloomFilter.from_params(
        params_for_target(len(keys), max(model_full, 1.0 / full_samples)),
        derive_seed(seed, "reference-filter"),
    )
    reference.insert_many(list(keys))
    ref_full = empirical_fpr(
        reference, sample(full, full_samples, derive_seed(seed, "reference-full"))
    )
    ref_restricted = empirical_fpr(
        reference,
        sample(restricted, restricted_samples, derive_seed(seed, "reference-restricted")),
    )

    shift_ratio = (
        eval_restricted.empirical_fpr / eval_full.empirical_fpr
        if eval_full.empirical_fpr > 0
        else math.inf
    )

    figures = {
        "above_threshold_rate_full_range": {
            "reported": REPORTED_ALPHA_FULL,
            "derived": _fraction_dict(alpha_full),
            "reproduced": abs(float(alpha_full) - REPORTED_ALPHA_FULL)
            <= 0.1 * REPORTED_ALPHA_FULL,
            "note": "derived exactly by enumerating the eligible support",
        },
        "composite_rate_full_range": {
            "reported": REPORTED_FPR_FULL,
            "derived": model_full,
            "reproduced": abs(model_full - REPORTED_FPR_FULL) <= 0.1 * REPORTED_FPR_FULL,
            "note": "above-threshold rate composed with the backup filter rate",
        },
        "composite_rate_restricted_range": {
            "reported": REPORTED_FPR_RESTRICTED,
            "derived": model_restricted,
            "reproduced": abs(model_restricted - REPORTED_FPR_RESTRICTED)
            <= 0.1 * REPORTED_FPR_RESTRICTED,
            "qualitative_jump_confirmed": shift_ratio >= 5.0,
            "note": "the jump under restricted-range queries is confirmed "
            "qualitatively even though the reported value does not reproduce",
        },
        "extra_bits_per_stored_element": {
            "reported": REPORTED_EXTRA_BITS,
            "derived": backup_bpe - standard_bpe,
            "derived_formula": delta_formula,
            "reproduced": abs(delta_formula - REPORTED_EXTRA_BITS) <= 0.1,
            "note": "halving the false positive target costs 1/ln2 ~ 1.44 "
            "bits per element, i.e. almost 1.5",
        },
        "backup_stored_keys": {
            "reported": REPORTED_BACKUP_KEYS,
            "derived": lbf.below_threshold_count,
            "reproduced": lbf.below_threshold_count == REPORTED_BACKUP_KEYS,
            "note": "keys scoring below the threshold at build time",
        },
    }

    return {
        "schema": REPORT_SCHEMA,
        "config": {
            "seed": seed,
            "full_samples": full_samples,
            "restricted_samples": restricted_samples,
            "backup_target_fpp": backup_target_fpp,
            "restricted_hi": restricted_hi,
            "tau": tau,
            "universe_size": example.universe_size,
            "hot_range": [example.hot_lo, example.hot_hi],
        },
        "build": {
            "key_count": lbf.key_count,
            "keys_in_hot_range": len(example.keys_in_range),
            "backup_keys": lbf.below_threshold_count,
            "backup_m": lbf.backup.m,
            "backup_k": lbf.backup.k,
            "scorer_bits": lbf.scorer.size_bits(),
            "total_bits": lbf.size_bits(),
        },
        "full_range": {
            "alpha_exact": _fraction_dict(alpha_full),
            "alpha_sampled": eval_full.alpha_estimate,
            "empirical_fpr": eval_full.empirical_fpr,
            "model_fpr": model_full,
            "backup_fpr_estimate": backup_rate,
            "binomial_std_err": eval_full.binomial_std_err,
            "sample_count": eval_full.sample_count,
        },
        "restricted_range": {
            "alpha_exact": _fraction_dict(alpha_restricted),
            "alpha_sampled": eval_restricted.alpha_estimate,
            "empirical_fpr": eval_restricted.empirical_fpr,
            "model_fpr": model_restricted,
            "backup_fpr_estimate": backup_rate,
            "binomial_std_err": eval_restricted.binomial_std_err,
            "sample_count": eval_restricted.sample_count,
        },
        "distribution_shift": {
            "learned_fpr_ratio": shift_ratio,
            "standard_fpr_full_range": ref_full,
            "standard_fpr_restricted_range": ref_restricted,
            "standard_m": reference.m,
            "standard_k": reference.k,
        },
        "size_comparison": {
            "backup_bits_per_stored_key": backup_bpe,
            "standard_bits_per_key": standard_bpe,
            "standard_m": standard_params.m,
            "standard_k": standard_params.k,
            "delta_bits_per_key_instantiated": backup_bpe - standard_bpe,
            "delta_bits_per_key_formula": delta_formula,
        },
        "reference_figures": figures,
    }
