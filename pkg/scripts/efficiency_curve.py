"""Optimized bin-averaged memory efficiency vs per-mode optical depth y.

Writes a plot-ready CSV (y, x*, eta*) and the optical depth needed for a target efficiency.
"""

import argparse
import csv
import sys

import numpy as np

from multimode_repeater import memory


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--y-max", type=float, default=200.0)
    ap.add_argument("--points", type=int, default=40)
    ap.add_argument("--target", type=float, default=0.9)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()

    ys = np.geomspace(1.0, args.y_max, args.points)
    curve = memory.efficiency_curve(ys)
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(fh)
    w.writerow(["y", "x_star", "eta_star"])
    for y, x, e in curve.rows():
        w.writerow([f"{y:.6g}", f"{x:.6g}", f"{e:.6g}"])
    if fh is not sys.stdout:
        fh.close()

    y_req = memory.required_per_mode_depth(args.target)
    print(f"# eta* >= {args.target}: y >= {y_req:g}", file=sys.stderr)
    for N in (100, 400, 1000):
        print(f"#   N = {N:5d}: alpha0 L = {N * y_req:g}", file=sys.stderr)


if __name__ == "__main__":
    main()
