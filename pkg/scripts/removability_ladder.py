"""Point-hole capacity ladder on the interval, printed and saved as CSV.

Runs the default resolution ladder for a slow-decay and a fast-decay kernel
order and prints the fitted log-log slopes with the removable /
non-removable verdicts.
"""

import argparse
import os
import sys

os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from nlhodge.capacity import removability_sweep  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas", default="0.5,1.5")
    ap.add_argument("--resolutions", default="50,100,200,400,800")
    ap.add_argument("--eps", type=float, default=0.25)
    ap.add_argument("--out", default=None, help="CSV path")
    args = ap.parse_args()

    report = removability_sweep(
        resolutions=tuple(int(v) for v in args.resolutions.split(",")),
        alphas=tuple(float(v) for v in args.alphas.split(",")),
        eps=args.eps,
    )
    print(report.to_csv(), end="")
    for alpha in sorted({row.alpha for row in report.rows}):
        print(f"alpha={alpha}: {report.verdict_for(alpha)}", file=sys.stderr)
    if args.out:
        report.save(args.out)


if __name__ == "__main__":
    main()
