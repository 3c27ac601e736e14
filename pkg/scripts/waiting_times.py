"""Monte Carlo of the nested protocol against the analytic times, the 3/2
waiting factor, and the creation-time gap with and without same-interval pairing."""

import argparse

from multimode_repeater import montecarlo as mc
from multimode_repeater import rates


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--gap-modes", type=int, default=1000)
    args = ap.parse_args()

    cfg = mc.SimConfig.from_params(rates.RepeaterParams(), trials=args.trials, seed=args.seed)
    rep = mc.compare_to_analytic(cfg, workers=args.threads)
    for name, value, lo, hi in rep.rows:
        print(f"{name:28s} {value:12.5g}   [{lo:.5g}, {hi:.5g}]")

    ratio = mc.waiting_factor_check(1e-3, 10**6, mc.stream_rng(args.seed, "waiting"))
    print(f"waiting factor (P0=1e-3)      {ratio:.5f}   exact {mc.expected_max_geometric(1e-3) * 1e-3:.5f}")

    gap_cfg = mc.with_modes(cfg, args.gap_modes)
    for label, c in (("unrestricted", gap_cfg), ("same interval", gap_cfg.with_(same_interval_mode=True))):
        s = mc.phase_error_stats(c, mc.stream_rng(args.seed, label), 200000)
        print(f"N={args.gap_modes} {label:14s} gap {s.mean_gap_s:.4g} s   both links ready after {s.mean_pair_time_s:.4g} s")


if __name__ == "__main__":
    main()
