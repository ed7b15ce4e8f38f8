#!/usr/bin/env python3
"""Uncoded BER curves at full loading as the array grows.

Larger systems harden the Gram matrix, so the detector approaches the
single-input AWGN reference as N = K increases.
"""
import argparse
import os

from chemp.baselines import siso_awgn_ber
from chemp.harness import SimConfig, run_uncoded_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="16,32,64,128")
    ap.add_argument("--snr", default="4:14:2")
    ap.add_argument("--target-errors", type=int, default=100)
    ap.add_argument("--max-trials", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    start, stop, step = (float(t) for t in args.snr.split(":"))
    grid = []
    s = start
    while s <= stop + 1e-9:
        grid.append(round(s, 6))
        s += step

    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "ber_vs_size.csv")
    with open(path, "w") as f:
        f.write("n,snr_db,ber,errors,bits,siso_awgn\n")
        for n in (int(t) for t in args.sizes.split(",")):
            cfg = SimConfig(n_antennas=n, n_users=n, snr_db=tuple(grid),
                            receiver="mpd", seed=args.seed,
                            target_errors=args.target_errors,
                            max_trials=args.max_trials)
            curve = run_uncoded_sweep(cfg, workers=args.workers)
            for p in curve.points:
                f.write(f"{n},{p.snr_db:g},{p.ber:.6e},{p.errors},{p.bits},"
                        f"{siso_awgn_ber(p.snr_db):.6e}\n")
            print(f"N=K={n}: " + "  ".join(f"{p.snr_db:g}dB:{p.ber:.1e}"
                                           for p in curve.points))
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
