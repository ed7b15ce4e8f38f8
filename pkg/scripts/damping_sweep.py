#!/usr/bin/env python3
"""Uncoded BER versus damping factor at a fixed SNR.

Reproduces the receiver's characteristic damping optimum: undamped beliefs
oscillate at full loading while moderate damping stabilizes them.
"""
import argparse
import os

from chemp.harness import SimConfig, run_uncoded_sweep
from chemp.mpd import MpdConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--k", type=int, default=64)
    ap.add_argument("--snr", type=float, default=12.0)
    ap.add_argument("--deltas", default="0.0,0.1,0.2,0.33,0.5,0.7")
    ap.add_argument("--target-errors", type=int, default=100)
    ap.add_argument("--max-trials", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "damping_sweep.csv")
    rows = []
    for delta in (float(t) for t in args.deltas.split(",")):
        cfg = SimConfig(n_antennas=args.n, n_users=args.k, snr_db=(args.snr,),
                        receiver="mpd", mpd=MpdConfig(damping=delta),
                        seed=args.seed, target_errors=args.target_errors,
                        max_trials=args.max_trials)
        point = run_uncoded_sweep(cfg, workers=args.workers).points[0]
        rows.append((delta, point))
        print(f"delta {delta:4.2f}: ber {point.ber:.3e} ({point.errors} errors)")
    with open(path, "w") as f:
        f.write("damping,ber,errors,bits\n")
        for delta, p in rows:
            f.write(f"{delta:g},{p.ber:.6e},{p.errors},{p.bits}\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
