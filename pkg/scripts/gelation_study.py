#!/usr/bin/env python3
"""Truncation-refinement study: gelling vs mass-conserving kernels.

Runs the same monodisperse initial data under a multiplicative kernel
(mass escapes to large sizes in finite time) and under a unit kernel
(mass conserved in the infinite-size limit), growing the truncation size,
and prints the per-n gelation estimates and mass retention that separate
the two regimes.

    python scripts/gelation_study.py --n-list 64,128,256 --T 10 --out study.json
"""
import argparse
import json
import sys
import time

from sdcoag import (
    InitialData,
    KappaModel,
    KernelSpec,
    ThetaSequence,
    refine_in_n,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-list", default="64,128,256,512",
                    help="comma-separated ascending truncation sizes")
    ap.add_argument("--T", type=float, default=10.0, help="horizon for the gelling kernel")
    ap.add_argument("--delta", type=float, default=0.1, help="gelation detection threshold")
    ap.add_argument("--samples", type=int, default=501)
    ap.add_argument("--out", default=None, help="write the two reports as JSON")
    args = ap.parse_args()
    n_list = tuple(int(tok) for tok in args.n_list.split(","))

    cases = {
        "product_kernel": (KernelSpec(ThetaSequence.power(1, 1), KappaModel.zero()), args.T),
        "unit_kernel": (KernelSpec(ThetaSequence.power(1, 0), KappaModel.zero()), 1.0),
    }
    results = {}
    for name, (spec, horizon) in cases.items():
        t0 = time.perf_counter()
        report = refine_in_n(
            spec, InitialData.monodisperse(1.0), horizon, args.delta, n_list,
            samples=args.samples,
        )
        results[name] = report.to_json_dict()
        print(f"\n{name} (T={horizon:g}, {time.perf_counter()-t0:.1f}s): "
              f"{report.classification}")
        print(f"  {'n':>6} {'M1(T)/M1(0)':>14} {'gel time':>12}")
        for n, ret, gel in zip(report.n_list, report.mass_retention, report.gel_times):
            gel_s = f"{gel:.4f}" if gel is not None else "none"
            print(f"  {n:>6} {ret:>14.6f} {gel_s:>12}")

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=2)
        print(f"\nwrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
