#!/usr/bin/env python3
"""How often each allocator actually multiplexes subcarriers.

Per (algorithm, rate demand): mean counts of non-multiplexed, mutual-SIC
and single-SIC subcarriers. Pairing only pays off under load, so the
shares grow with the rate demand.
"""

import argparse

from nomadas import Scenario
from nomadas.harness import RunConfig, aggregate, run_monte_carlo

ALGS = ("SRRH-LPO", "MutSIC-SOPAd", "MutAndSingSIC")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rates-mbps", default="9,12")
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    scen = Scenario()
    rates = tuple(float(r) * 1e6 for r in args.rates_mbps.split(","))
    cfg = RunConfig(scen, ALGS, trials=args.trials, base_seed=args.seed,
                    sweep_axis="rate", sweep_values=rates)
    rows = aggregate(run_monte_carlo(cfg))

    S = scen.num_subcarriers
    print(f"{S} subcarriers, {args.trials} drops; "
          f"mean counts (share of the band)")
    header = f"  {'algorithm':>14s}  {'rate':>8s}  " \
             f"{'plain':>14s}  {'mutual-SIC':>14s}  {'single-SIC':>14s}"
    print(header)
    for row in sorted(rows, key=lambda r: (r.sweep_value, r.algorithm)):
        plain, mut, sing = (row.mean_nonmux_sc, row.mean_mutsic_sc,
                            row.mean_singsic_sc)
        print(f"  {row.algorithm:>14s}  {row.sweep_value / 1e6:>5.0f} Mb  "
              f"{plain:6.1f} ({plain / S:5.1%})  "
              f"{mut:6.1f} ({mut / S:5.1%})  "
              f"{sing:6.1f} ({sing / S:5.1%})")


if __name__ == "__main__":
    main()
