#!/usr/bin/env python3
"""Concentration grid: empirical exceedance of |X - Y| >= eps vs the closed-form bound.

X and Y are empirical false positive rates of the worked-example learned
filter on independently sampled test/query sets.  Writes one CSV row per
(epsilon, t_size, q_size) grid point.
"""

import argparse
import csv
import sys

from learnedbloom.bloom import params_for_target
from learnedbloom.evaluation import concentration_experiment
from learnedbloom.hashing import derive_seed
from learnedbloom.learned import LearnedBloomFilter
from learnedbloom.workloads import hot_range_example


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0xC0FFEE)
    parser.add_argument("--trials", type=int, default=1000)
    parser.add_argument("--sizes", default="1000,10000", help="comma-separated set sizes")
    parser.add_argument("--epsilons", default="0.02,0.05")
    parser.add_argument("--backup-target-fpp", type=float, default=0.01)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    epsilons = [float(e) for e in args.epsilons.split(",")]

    example, scorer, tau = hot_range_example(derive_seed(args.seed, "dataset"))
    lbf = LearnedBloomFilter.build(
        example.keys,
        scorer,
        tau,
        params_for_target(len(example.keys_outside), args.backup_target_fpp),
        derive_seed(args.seed, "backup"),
    )
    dist = example.full_range_queries()

    sink = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["epsilon", "t_size", "q_size", "trials", "exceed_fraction", "theorem_bound"])
    for epsilon in epsilons:
        for t_size in sizes:
            for q_size in sizes:
                report = concentration_experiment(
                    lbf, dist, t_size, q_size, epsilon, args.trials,
                    derive_seed(args.seed, f"grid-{epsilon}-{t_size}-{q_size}"),
                )
                writer.writerow(
                    [epsilon, t_size, q_size, report.trials,
                     report.exceed_fraction, report.theorem_bound]
                )
                sink.flush()
    if args.out:
        sink.close()


if __name__ == "__main__":
    main()
