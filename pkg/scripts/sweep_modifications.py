#!/usr/bin/env python3
"""Sweep modification strengths to check ordering stability.

The validation preset fixes remove/introduce fractions at 0.3 and the
introduced magnitude at 1.0.  This sweep reruns a reduced validation over
a grid of fractions and magnitudes and reports, for each cell, how cleanly
the soundness metric separates the original maps from the degraded ones.
The frozen defaults in ValidationSettings are the cell family with wide
separation that is still far from the degenerate edges (fraction 0 changes
nothing, fraction near 1 leaves no informative mass to rank).

Usage:
    python scripts/sweep_modifications.py
    python scripts/sweep_modifications.py --trials 10 --samples 600

Runtime scales with trials * |fractions| * |magnitudes|; the defaults
finish in a few minutes on a laptop.
"""

import argparse
import sys
import time

from soco import ValidationSettings, run_validation

FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5)
MAGNITUDES = (0.25, 0.5, 0.75, 1.0)


def separation(result):
    """Worst-case gaps (soundness, completeness) between clean and degraded maps.

    Soundness: min over shared aligned levels of original - introduce.
    Completeness: min over thresholds of original_drop - introduce_drop,
    both in curve units, larger = easier to tell the variants apart.
    """
    org = result.aligned_soundness["original"]
    intro = result.aligned_soundness["introduce"]
    shared = sorted(set(org) & set(intro))
    s_gap = min(org[lvl][0] - intro[lvl][0] for lvl in shared) if shared else float("nan")
    c_gap = float(
        (result.completeness["original"].mean - result.completeness["introduce"].mean).min()
    )
    return s_gap, c_gap


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--samples", type=int, default=400)
    p.add_argument("--features", type=int, default=200)
    p.add_argument("--seed", type=int, default=7)
    args = p.parse_args(argv)

    print(f"{args.samples} x {args.features}, {args.trials} trials per cell")
    print(f"{'fraction':>9} {'magnitude':>10} {'sound gap':>10} {'compl gap':>10} {'sec':>6}")
    for fraction in FRACTIONS:
        for magnitude in MAGNITUDES:
            settings = ValidationSettings(
                n_samples=args.samples,
                n_features=args.features,
                seed=args.seed,
                n_trials=args.trials,
                remove_fraction=fraction,
                introduce_fraction=fraction,
                introduce_magnitude=magnitude,
            )
            start = time.perf_counter()
            s_gap, c_gap = separation(run_validation(settings))
            elapsed = time.perf_counter() - start
            print(
                f"{fraction:>9.2f} {magnitude:>10.2f} {s_gap:>10.4f} "
                f"{c_gap:>10.4f} {elapsed:>6.1f}"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
