#!/usr/bin/env python3
"""Print the hand-typeset-versus-engine discrepancy table.

For each closed-form coefficient (r0..r2, a0..a2, b0..b2, d0..d2) this
evaluates the verbatim typeset reading and the repaired reading against the
series engine on a set of scenes, and prints per-coefficient worst gaps
plus the suspected-typo flags.

Usage:
    python3 scripts/transcription_report.py [--seed 11] [--points 3]
"""

import argparse
import sys

import numpy as np

from bimetric import (builtin_scene, crosscheck_appendix,
                      summarize_discrepancies)
from bimetric.appendix import FIXES


def run():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--points", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    points = [tuple(rng.uniform(-0.6, 0.6, 4)) for _ in range(args.points)]
    scenes = {name: builtin_scene(name, seed=args.seed)
              for name in ("euclidean4", "sphere4_stereo",
                           "conformally_flat", "torus_bump",
                           "random_smooth")}

    records = crosscheck_appendix(scenes.items(), points)
    summary = summarize_discrepancies(records)

    print(f"{'coeff':>6} {'verbatim rel gap':>17} {'corrected gap':>14} "
          f"{'typo?':>6}  repairs")
    for name, row in summary.items():
        repairs = "; ".join(FIXES.get(name, ())) or "-"
        print(f"{name:>6} {row['max_rel_gap_verbatim']:>17.3e} "
              f"{row['max_abs_gap_corrected']:>14.3e} "
              f"{str(row['suspected_typo']):>6}  {repairs}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
