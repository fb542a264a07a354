#!/usr/bin/env python3
"""Sweep iteration counts for each quantizer and emit plot-ready CSV.

Columns: quantizer, T, mean_gap, se_gap, gap_bound, bits_per_iteration.

Usage: python scripts/convergence_sweep.py --out results/sweep.csv
"""

import argparse

from rotquant.experiments import CSV_SCHEMA, run_psgd


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/sweep.csv")
    ap.add_argument("--d", type=int, default=128)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    settings = [
        ("identity", "noisy-linear", {}),
        ("ratq", "noisy-linear", {}),
        ("rcs", "noisy-linear", {"r": 64}),
        ("aratq", "quadratic-gaussian", {}),
    ]
    with open(args.out, "w") as f:
        f.write(CSV_SCHEMA + "\n")
        f.write("quantizer,T,mean_gap,se_gap,gap_bound,bits_per_iteration\n")
        for T in (64, 256, 1024, 4096):
            for qname, oracle, extra in settings:
                res = run_psgd(qname, oracle, d=args.d, T=T, D=1.0, B=1.0,
                               n_trials=args.trials, master_seed=args.seed,
                               workers=args.workers, **extra)
                s = res.summary
                f.write(f"{qname},{T},{s['mean_gap']!r},{s['se_gap']!r},"
                        f"{s['gap_bound']!r},{s['bits_per_iteration']}\n")
                print(qname, T, s["mean_gap"], "<=", s["gap_bound"])
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
