#!/usr/bin/env python3
"""Domain verdicts for the worked octonion example with closed sums and products.

Usage: python3 scripts/example52.py [--horizon N] [--v 2|3] [--json out.json]
"""
import argparse
import json

from octspec.diagmodel import example52_report


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=int, default=10**6)
    ap.add_argument("--v", type=int, default=3, choices=(2, 3))
    ap.add_argument("--json", default=None, help="write the full report here")
    args = ap.parse_args()

    rep = example52_report(v=args.v, horizon=args.horizon)
    print(f"{'domain':<10} {'member':>6} {'exponent':>9}  last partial sum")
    for name, vd in {**rep["verdicts"], **rep["extra"]}.items():
        last = vd.partial_sums[-1][1] if vd.partial_sums else float("nan")
        print(f"{name:<10} {str(bool(vd.member)):>6} {vd.exponent:>9.3f}  {last:.10f}")
    lo, hi = rep["verdicts"]["D(Q+^B)"].limit_bracket
    print(f"limit bracket for |(Q+^B)x|^2: [{lo:.10f}, {hi:.10f}]")
    print(f"verdicts as expected: {rep['matches_expected']}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rep, fh, indent=2, default=lambda o: o.to_json())


if __name__ == "__main__":
    main()
