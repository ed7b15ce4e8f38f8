#!/usr/bin/env python3
"""Perfect-CSI and pilot-estimated receivers side by side.

Compares the detector with true (J, z), the same detector fed the direct
pilot estimates, and the linear MMSE baseline under both CSI assumptions.
"""
import argparse
import os

from chemp.harness import SimConfig, run_uncoded_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--k", type=int, default=64)
    ap.add_argument("--snr", default="6,8,10,12")
    ap.add_argument("--frame-length", type=int, default=None)
    ap.add_argument("--target-errors", type=int, default=100)
    ap.add_argument("--max-trials", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    grid = tuple(float(t) for t in args.snr.split(","))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "estimated_csi.csv")
    with open(path, "w") as f:
        f.write("receiver,snr_db,ber,errors,bits\n")
        for receiver in ("mpd", "chemp-estimated", "mmse", "mmse-estimated"):
            cfg = SimConfig(n_antennas=args.n, n_users=args.k, snr_db=grid,
                            receiver=receiver, seed=args.seed,
                            frame_length=args.frame_length,
                            target_errors=args.target_errors,
                            max_trials=args.max_trials)
            curve = run_uncoded_sweep(cfg, workers=args.workers)
            for p in curve.points:
                f.write(f"{receiver},{p.snr_db:g},{p.ber:.6e},{p.errors},{p.bits}\n")
            print(f"{receiver:16s}: " + "  ".join(f"{p.snr_db:g}dB:{p.ber:.1e}"
                                                  for p in curve.points))
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
