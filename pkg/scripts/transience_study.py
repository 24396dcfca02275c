#!/usr/bin/env python3
"""Study: traces escape to infinity, with scale-invariant rate.

Measures the median maximum modulus over horizons T, 2T, 4T for both
seed-forced ensembles.  For the single-force process the law is scale
invariant, so quadrupling the capacity horizon must double lengths:
median(4T)/median(T) = 2.  The two-force process has a fixed length
scale (the far force point), so only monotone growth is expected.
"""

import argparse
import sys
import time

from slelab.io_utils import write_json
from slelab.reversibility import transience_report


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-paths", type=int, default=1000)
    ap.add_argument("--kappa", type=float, default=2.0)
    ap.add_argument("--rho", type=float, default=1.0)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default=None, help="optional summary JSON path")
    return ap.parse_args()


def main() -> int:
    args = parse_args()
    results = {}
    for kind in ("degenerate", "intermediate"):
        start = time.perf_counter()
        report = transience_report(
            kind, args.kappa, args.rho, T=args.t, n_paths=args.n_paths,
            master_seed=args.seed, threads=args.threads,
        )
        secs = time.perf_counter() - start
        results[kind] = report
        medians = ", ".join(f"{m:.4f}" for m in report["medians"])
        print(f"{kind:<14} medians [{medians}]  "
              f"increasing: {report['strictly_increasing']}  ({secs:.1f}s)")
        if kind == "degenerate":
            print(
                f"{'':<14} ratio median(4T)/median(T) = "
                f"{report['ratio_4T_over_T']:.4f}  "
                f"(within 10% of 2: {report['ratio_within_10pct']})"
            )
    if args.out:
        write_json(args.out, results)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
