#!/usr/bin/env python3
"""Run every verification suite across the builtin scenes and collect the
JSON reports under an output directory.

Usage:
    python3 scripts/run_verification_campaign.py [--outdir reports]
                                                 [--seed 7] [--fast]
"""

import argparse
import pathlib
import sys

from bimetric.cli import main as cli_main

SCENE_SUITES = {
    "conformally_flat": ["covariance", "invariants", "intertwining",
                         "oracle", "appendix"],
    "torus_bump": ["covariance", "invariants", "oracle", "hochschild"],
    "sphere4_stereo": ["oracle", "appendix"],
    "euclidean4": ["oracle"],
}


def run():
    ap = argparse.ArgumentParser()
    ap.add_argument("--outdir", default="reports")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--fast", action="store_true",
                    help="skip the integral-based suites and wres")
    args = ap.parse_args()
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    worst = 0
    for scene, suites in SCENE_SUITES.items():
        for suite in suites:
            if args.fast and suite == "hochschild":
                continue
            out = outdir / f"{scene}.{suite}.json"
            argv = ["verify", "--scene", scene, "--suite", suite,
                    "--seed", str(args.seed), "--out", str(out)]
            if suite == "hochschild":
                argv += ["--grid", "6"]
            code = cli_main(argv)
            worst = max(worst, code)
    if not args.fast:
        code = cli_main(["wres", "--scene", "torus_bump", "--grid", "16",
                         "--seed", str(args.seed),
                         "--out", str(outdir / "torus_bump.wres.json")])
        worst = max(worst, code)
    print(f"campaign reports written to {outdir}/", file=sys.stderr)
    return worst


if __name__ == "__main__":
    sys.exit(run())
