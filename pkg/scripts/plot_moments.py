#!/usr/bin/env python3
"""Render the moment columns of a trajectory CSV (optional helper).

Not part of the package contract; needs matplotlib.

    sdcoag simulate run.ini --out-dir out
    python scripts/plot_moments.py out/trajectory.csv --out moments.png
"""
import argparse
import csv
import sys


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv_path")
    ap.add_argument("--out", default=None, help="PNG path (default: show interactively)")
    ap.add_argument("--log", action="store_true", help="log scale on the moment axis")
    args = ap.parse_args()

    import matplotlib

    if args.out:
        matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(args.csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        print("empty CSV", file=sys.stderr)
        return 1
    t = [float(r["t"]) for r in rows]

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for col in ("M0", "M1", "M2"):
        ax1.plot(t, [float(r[col]) for r in rows], label=col)
    ax1.set_xlabel("t")
    ax1.set_title("moments")
    if args.log:
        ax1.set_yscale("log")
    ax1.legend()

    for col in ("I_theta_sq", "I_M1_sq", "I_M0_sq", "I_total_coag"):
        ax2.plot(t, [float(r[col]) for r in rows], label=col)
    ax2.set_xlabel("t")
    ax2.set_title("running integrals")
    ax2.legend()

    fig.tight_layout()
    if args.out:
        fig.savefig(args.out, dpi=130)
        print(f"wrote {args.out}")
    else:
        plt.show()
    return 0


if __name__ == "__main__":
    sys.exit(main())
