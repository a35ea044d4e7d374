#!/usr/bin/env python3
"""Measure online traffic of loopback joins and compare it with the closed form.

Example:
    python scripts/measure_traffic.py --sizes 64 256 1024 --m 8 --rho 0.8
"""

import argparse
import csv
import sys
import time

from dualjoin.cost import expected_wire_breakdown, expected_wire_payload_bytes, feature_fraction
from dualjoin.datagen import generate_tables
from dualjoin.join import run_loopback, verify_join
from dualjoin.ring import Ring
from dualjoin.rng import Rng


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 256, 1024, 4096])
    ap.add_argument("--n-b-ratio", type=float, default=1.0, help="n_b = round(ratio * n_a)")
    ap.add_argument("--m", type=int, default=32, help="features per party")
    ap.add_argument("--rho", type=float, default=0.8)
    ap.add_argument("--ell", type=int, default=64, choices=[8, 16, 32, 64])
    ap.add_argument("--seed", default="traffic")
    ap.add_argument("--csv", help="also write rows to this file")
    args = ap.parse_args()

    rows = []
    for n_a in args.sizes:
        n_b = max(1, round(args.n_b_ratio * n_a))
        ta, tb = generate_tables(n_a, n_b, args.m, args.m, args.rho, Rng(f"{args.seed}/{n_a}"), Ring(args.ell))
        t0 = time.perf_counter()
        res = run_loopback(ta, tb, ell=args.ell, seed_a=f"{args.seed}/a", seed_b=f"{args.seed}/b")
        secs = time.perf_counter() - t0
        st = res.stats_a
        want = expected_wire_payload_bytes(n_a, n_b, args.m, args.m, st.c, args.ell)
        per_msg = expected_wire_breakdown(n_a, n_b, args.m, args.m, st.c, args.ell)
        rows.append({
            "n_a": n_a, "n_b": n_b, "m": args.m, "c": st.c, "ell": args.ell,
            "measured_bytes": st.online_payload_bytes, "formula_bytes": want,
            "exact": st.online_payload_bytes == want,
            "rounds": st.online_rounds,
            "feature_fraction": round(feature_fraction(n_a, n_b, args.m, args.m, st.c, args.ell), 4),
            "masked_flights": st.sent_types.get("MISFA_MASKED_A", 0) + res.stats_b.sent_types.get("MISFA_MASKED_B", 0),
            "smig_bytes": per_msg["SMIG_MSG1"] + per_msg["SMIG_MSG2"] + per_msg["SMIG_MSG3"],
            "correct": verify_join(res.share_a, res.share_b, ta, tb).ok,
            "seconds": round(secs, 3),
        })

    w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            out = csv.DictWriter(fh, fieldnames=list(rows[0]))
            out.writeheader()
            out.writerows(rows)
    return 0 if all(r["exact"] and r["correct"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
