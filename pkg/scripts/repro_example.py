#!/usr/bin/env python3
"""Rebuild the hot-range worked example and write its reproduction report.

Equivalent to ``lbf repro-example``; kept as a script so the experiment can
be tweaked in place (sample sizes, backup sizing) without touching the CLI.
"""

import argparse
import json

from learnedbloom.repro import build_report


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--samples", type=int, default=1_000_000)
    parser.add_argument("--restricted-samples", type=int, default=200_000)
    parser.add_argument("--backup-target-fpp", type=float, default=0.0002)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    report = build_report(
        seed=args.seed,
        full_samples=args.samples,
        restricted_samples=args.restricted_samples,
        backup_target_fpp=args.backup_target_fpp,
    )
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)

    flags = report["reference_figures"]
    print()
    for name, figure in sorted(flags.items()):
        status = "reproduced" if figure["reproduced"] else "NOT reproduced"
        derived = figure.get("derived_formula", figure["derived"])
        if isinstance(derived, dict):
            derived = derived["value"]
        print(f"  {name}: reported {figure['reported']} vs derived {derived:.6g} -> {status}")


if __name__ == "__main__":
    main()
