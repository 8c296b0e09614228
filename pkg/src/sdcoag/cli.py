"""Command line interface: simulate, check, sweep, version.

Exit codes: 0 all requested checks pass (or nothing to check), 1 config
error, 2 at least one bound check failed, 3 numerical failure during
integration.  Output files are byte-stable across repeated invocations
of the same config: CSV cells carry 17 significant digits (lossless for
doubles) with LF line endings, JSON key order is fixed.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config
from .convergence import refine_in_n
from .diagnostics import evaluate_suite
from .errors import ConfigError, NumericsError
from .integrate import Trajectory, integrate, uniform_grid
from .system import make_initial_state

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BOUND_FAILURE = 2
EXIT_NUMERIC = 3

TRAJECTORY_CSV = "trajectory.csv"
BOUNDS_JSON = "bounds.json"
SWEEP_JSON = "sweep.json"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_csv(traj: Trajectory, path, head_size: int = 8) -> None:
    """Moment series plus the first few concentration components."""
    k_head = min(traj.n, head_size)
    cols = [
        "t", "M0", "M1", "M2",
        "I_theta_sq", "I_M1_sq", "I_M0_sq", "I_total_coag",
    ] + [f"omega_{i}" for i in range(1, k_head + 1)]
    m0 = traj.moment_series(0.0)
    m1 = traj.moment_series(1.0)
    m2 = traj.moment_series(2.0)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for k in range(traj.n_samples):
            row = [
                traj.times[k], m0[k], m1[k], m2[k],
                traj.acc_theta_sq[k], traj.acc_m1_sq[k],
                traj.acc_m0_sq[k], traj.acc_total_coag[k],
            ] + [traj.omegas[k, i] for i in range(k_head)]
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def emit_bounds_json(reports, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump([r.to_json_dict() for r in reports], fh, indent=2)
        fh.write("\n")


def emit_sweep_json(report, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_json_dict(), fh, indent=2)
        fh.write("\n")


def _say(quiet: bool, msg: str) -> None:
    if not quiet:
        print(msg)


def run(cfg: RunConfig, mode: str, out_dir=None, quiet: bool = False) -> int:
    """Execute one config: integrate, then check or sweep as requested."""
    if mode == "sweep" and len(cfg.sweep.n_list) < 3:
        raise ConfigError("sweep.n_list: need at least 3 ascending sizes for a sweep")
    out = Path(out_dir) if out_dir is not None else Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)

    if mode == "sweep":
        report = refine_in_n(
            cfg.kernel_spec(),
            cfg.initial_data(),
            cfg.run.T,
            cfg.sweep.delta,
            cfg.sweep.n_list,
            cfg.integrator_config(),
            samples=cfg.run.samples,
            tail_cutoffs=cfg.run.tail_cutoffs,
        )
        emit_sweep_json(report, out / SWEEP_JSON)
        _say(quiet, f"sweep over n={list(report.n_list)}: {report.classification}")
        if "failure" in report.meta:
            print(f"sweep aborted early: {report.meta['failure']}", file=sys.stderr)
            return EXIT_NUMERIC
        return EXIT_OK

    spec = cfg.kernel_spec()
    init = make_initial_state(cfg.initial_data(), cfg.run.n)
    grid = uniform_grid(cfg.run.T, cfg.run.samples)
    try:
        traj = integrate(
            spec, init, cfg.run.T, grid, cfg.integrator_config(), cfg.run.tail_cutoffs
        )
    except NumericsError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    emit_csv(traj, out / TRAJECTORY_CSV, cfg.output.head_size)
    _say(
        quiet,
        f"integrated n={traj.n} to T={cfg.run.T:g}: "
        f"{traj.step_stats.accepted} steps ({traj.step_stats.rejected} rejected), "
        f"M1 {traj.moment(0, 1.0):.6g} -> {traj.moment(traj.n_samples - 1, 1.0):.6g}",
    )
    if mode == "simulate":
        return EXIT_OK

    reports = evaluate_suite(
        traj,
        cfg.checks.bounds,
        eta=cfg.run.eta,
        kappa0=cfg.checks.kappa0,
        B=cfg.checks.B,
        C=cfg.checks.C,
        zeta=cfg.checks.zeta,
        n_probe=cfg.checks.n_probe,
    )
    emit_bounds_json(reports, out / BOUNDS_JSON)
    all_pass = True
    for rep in reports:
        if rep.params.get("inapplicable"):
            verdict = "inapplicable"
        else:
            verdict = "pass" if rep.passed else "FAIL"
            all_pass = all_pass and rep.passed
        tag = f"{rep.bound_id}" + (f"(r={rep.params['r']})" if "r" in rep.params else "")
        _say(quiet, f"  {tag:<14} {verdict:<12} margin={rep.margin:.6g}")
    return EXIT_OK if all_pass else EXIT_BOUND_FAILURE


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sdcoag",
        description="Truncated coagulation system solver with certified bound checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("simulate", "integrate and write the trajectory CSV"),
        ("check", "integrate, evaluate the bound checks, write CSV and JSON"),
        ("sweep", "run the truncation-refinement study and write JSON"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="path to the run config file")
        p.add_argument("--out-dir", default=None, help="override [output] dir")
        p.add_argument("--seed", type=int, default=None,
                       help="reserved; all computation is deterministic")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub.add_parser("version", help="print the package version")

    args = parser.parse_args(argv)
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    try:
        cfg = load_config(args.config)
        return run(cfg, args.command, out_dir=args.out_dir, quiet=args.quiet)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
