"""Double-emission infidelity slope d(1-F)/dp from the Fock-state oracle,
compared with the linear model 56 (1 - eta)."""

import argparse

import numpy as np

from multimode_repeater import oracle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--eta", type=float, nargs="+", default=[0.7, 0.81, 0.9, 0.95, 0.99])
    ap.add_argument("--threshold", action="store_true", help="non-resolving detectors")
    ap.add_argument("--poisson", action="store_true", help="Poissonian pair statistics")
    args = ap.parse_args()

    stats = "poisson" if args.poisson else "thermal"
    print("n   eta    slope      slope/(1-eta)   56(1-eta)")
    for n in args.levels:
        for eta in args.eta:
            s = oracle.chain_fidelity_slope(n, eta, resolving=not args.threshold, statistics=stats)
            ratio = s / (1 - eta) if eta < 1 else np.nan
            print(f"{n}  {eta:5.3f}  {s:9.4f}  {ratio:12.2f}  {56 * (1 - eta):10.3f}")


if __name__ == "__main__":
    main()
