#!/usr/bin/env python3
"""Uncoded BER versus loading factor K/N at fixed N.

Lower loading hardens the Gram matrix further; performance improves
monotonically as users are removed.
"""
import argparse
import os

from chemp.harness import SimConfig, run_uncoded_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--users", default="16,32,64,96,128")
    ap.add_argument("--snr", type=float, default=8.0)
    ap.add_argument("--target-errors", type=int, default=100)
    ap.add_argument("--max-trials", type=int, default=50000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "loading_sweep.csv")
    with open(path, "w") as f:
        f.write("n,k,alpha,snr_db,ber,errors,bits\n")
        for k in (int(t) for t in args.users.split(",")):
            cfg = SimConfig(n_antennas=args.n, n_users=k, snr_db=(args.snr,),
                            receiver="mpd", seed=args.seed,
                            target_errors=args.target_errors,
                            max_trials=args.max_trials)
            p = run_uncoded_sweep(cfg, workers=args.workers).points[0]
            f.write(f"{args.n},{k},{k / args.n:.4f},{p.snr_db:g},"
                    f"{p.ber:.6e},{p.errors},{p.bits}\n")
            print(f"K={k:4d} (alpha {k / args.n:.3f}): ber {p.ber:.3e}")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
