#!/usr/bin/env python3
"""Sweep m_b and print online bits of the join against the unit-constant baseline ESTIMATE.

Only the direction of the trend is meaningful; the baseline constants are
arbitrary, so the ratios are not comparable to measured speedups.
"""

import argparse

from dualjoin.cost import CostParams, iprivjoin_online_bits_estimate, join_online_bits


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2**16)
    ap.add_argument("--m-a", type=int, default=100)
    ap.add_argument("--m-b", type=int, nargs="+", default=[100, 200, 400, 800, 1600, 3200, 6400])
    ap.add_argument("--rho", type=float, default=0.8)
    ap.add_argument("--packed-idx", action="store_true")
    args = ap.parse_args()

    print(f"n={args.n} m_a={args.m_a} c={int(args.rho * args.n)}")
    print(f"{'m_b':>6} {'join_GB':>10} {'estimate_GB':>12} {'ratio':>8}")
    prev = None
    for m_b in args.m_b:
        p = CostParams(args.n, args.m_a, m_b, int(args.rho * args.n),
                       idx_bits=None if args.packed_idx else 64)
        ours = join_online_bits(p)
        base = iprivjoin_online_bits_estimate(p)["total"]
        ratio = ours / base
        trend = "" if prev is None else ("down" if ratio < prev else "NOT DOWN")
        print(f"{m_b:>6} {ours / 8e9:>10.3f} {base / 8e9:>12.3f} {ratio:>8.4f} {trend}")
        prev = ratio


if __name__ == "__main__":
    main()
