#!/usr/bin/env python3
"""Sweep the scene noise level and report per-stage category counts.

Shows how segmentation, matching and extraction degrade as the additive
gray-level noise grows.

Example:
    python scripts/noise_sweep.py --n 10 --levels 0 4 8 16 24 --out runs/noise
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from cartoseg.pipeline import PipelineConfig, run_pipeline
from cartoseg.synth import corpus_specs, write_corpus


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10, help="scenes per kind per level")
    ap.add_argument("--levels", type=float, nargs="+", default=[0.0, 4.0, 8.0, 16.0, 24.0])
    ap.add_argument("--clutter", type=int, default=2)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", default="runs/noise_sweep")
    args = ap.parse_args()

    print(f"{'noise':>6} {'stage':<9} {'correct':>8} {'acceptable':>11} {'incorrect':>10}")
    for level in args.levels:
        out = Path(args.out) / f"noise_{level:g}"
        corpus = out / "corpus"
        specs = corpus_specs(args.n, args.n, seed=args.seed, noise=level, clutter=args.clutter)
        write_corpus(corpus, specs)
        t0 = time.time()
        report = run_pipeline(
            PipelineConfig(
                corpus=str(corpus),
                out=str(out / "results"),
                save_intermediates=False,
                build_models=False,
            )
        )
        for stage in ("segment", "match", "extract"):
            counts = {"correct": 0, "acceptable": 0, "incorrect": 0}
            for kind_counts in report.aggregate[stage].values():
                for cat, c in kind_counts.items():
                    counts[cat] += c
            print(
                f"{level:>6g} {stage:<9} {counts['correct']:>8} "
                f"{counts['acceptable']:>11} {counts['incorrect']:>10}"
            )
        print(f"       ({2 * args.n} scenes in {time.time() - t0:.1f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
