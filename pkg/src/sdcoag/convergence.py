"""Truncation-refinement studies and the fixed-step reference comparison.

Growing the truncation size separates two behaviours that look alike at
a single n: mass lost through the truncation boundary (shrinks as n
grows) and genuine gelation (the estimated onset time stabilises).  The
classification thresholds are artifact choices, overridable per call and
recorded in the report; the underlying theory provides the dichotomy but
no finite-n decision rule.

Initial-data families are re-instantiated per n, so families with heavy
tails gain mass as n grows; retention is normalised per n accordingly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diagnostics import estimate_gelation_time
from .errors import IntegrationFailure, NumericsError, OracleInvalidError
from .integrate import IntegratorConfig, Trajectory, integrate, uniform_grid
from .kernels import KernelSpec
from .system import InitialData, State, make_initial_state

GEL_STABILIZATION_RTOL = 0.10
LOSS_HALVING_FACTOR = 0.5
ZERO_LOSS_FLOOR = 1e-9  # relative mass loss below this counts as exact conservation
ORACLE_CONVERGENCE_TOL = 1e-9


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-n gelation estimates and mass retention with a trend verdict."""

    n_list: tuple[int, ...]
    mass_retention: tuple[float, ...]
    gel_times: tuple[float | None, ...]
    classification: str  # conserving_trend | gelling_trend | inconclusive
    oracle_errors: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "n_list": list(self.n_list),
            "mass_retention": list(self.mass_retention),
            "gel_times": list(self.gel_times),
            "classification": self.classification,
            "oracle_errors": {str(k): v for k, v in self.oracle_errors.items()},
            "meta": self.meta,
        }


def relative_discrepancy(a: Trajectory, b: Trajectory) -> float:
    """max over grid and components of |a - b| / (1 + |b|)."""
    if a.omegas.shape != b.omegas.shape:
        raise ValueError("trajectories must share grid and truncation size")
    return float(np.max(np.abs(a.omegas - b.omegas) / (1.0 + np.abs(b.omegas))))


def oracle_compare(
    spec: KernelSpec,
    init: State,
    T: float,
    cfg: IntegratorConfig,
    h_oracle: float,
    samples: int = 101,
) -> float:
    """Discrepancy of the adaptive run against a fixed-step reference.

    The reference is validated by step halving: if halving h_oracle moves
    the reference by more than 1e-9 the oracle is rejected as
    unconverged.  Restricted to n <= 64 to keep the brute-force cost sane.
    """
    if init.n > 64:
        raise ValueError("oracle comparison is restricted to n <= 64")
    if h_oracle <= 0:
        raise ValueError("h_oracle must be positive")
    grid = uniform_grid(T, samples)
    # The driver lands on grid points, so steps above the grid spacing are
    # silently capped; cap here too or halving would not refine anything.
    h_eff = min(h_oracle, float(np.max(np.diff(grid))))
    fixed_cfg = IntegratorConfig(
        method="fixed_rk4", h=h_eff, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol
    )
    half_cfg = IntegratorConfig(
        method="fixed_rk4", h=h_eff / 2.0, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol
    )
    ref = integrate(spec, init, T, grid, fixed_cfg)
    ref_half = integrate(spec, init, T, grid, half_cfg)
    drift = relative_discrepancy(ref_half, ref)
    if drift > ORACLE_CONVERGENCE_TOL:
        raise OracleInvalidError(
            f"fixed-step reference not converged: halving h moved it by {drift:.3e}"
        )
    adaptive = integrate(spec, init, T, grid, cfg)
    return relative_discrepancy(adaptive, ref)


def _classify(
    retention: list[float],
    gel_times: list[float | None],
    gel_stab_rtol: float,
    loss_halving: float,
    zero_loss_floor: float,
) -> str:
    losses = [1.0 - r for r in retention]
    if all(g is not None for g in gel_times) and len(gel_times) >= 2:
        g_prev, g_last = gel_times[-2], gel_times[-1]
        stable = (
            abs(g_last - g_prev) < gel_stab_rtol * g_prev
            if g_prev > 0
            else g_last == g_prev
        )
        if stable:
            return "gelling_trend"
    monotone = all(
        retention[k + 1] >= retention[k] - zero_loss_floor
        for k in range(len(retention) - 1)
    )
    conserved_at_largest = losses[-1] <= zero_loss_floor
    halved = losses[0] > zero_loss_floor and losses[-1] < loss_halving * losses[0]
    if monotone and (conserved_at_largest or halved):
        return "conserving_trend"
    return "inconclusive"


def refine_in_n(
    spec: KernelSpec,
    init_family: InitialData,
    T: float,
    delta: float,
    n_list,
    cfg: IntegratorConfig | None = None,
    samples: int = 501,
    tail_cutoffs: tuple[int, ...] = (),
    gel_stab_rtol: float = GEL_STABILIZATION_RTOL,
    loss_halving: float = LOSS_HALVING_FACTOR,
    zero_loss_floor: float = ZERO_LOSS_FLOOR,
    oracle_h: float | None = None,
) -> ConvergenceReport:
    """Integrate the same family at every n in n_list and classify the trend.

    Runs are independent per n and reduced in ascending-n order, so the
    report is deterministic.  Any integration failure yields a partial
    report classified inconclusive.
    """
    ns = tuple(int(n) for n in n_list)
    if len(ns) < 3:
        raise ValueError("n_list must hold at least 3 sizes")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_list must be strictly ascending")
    cfg = cfg or IntegratorConfig()
    grid = uniform_grid(T, samples)

    retention: list[float] = []
    gel_times: list[float | None] = []
    oracle_errors: dict[int, float] = {}
    failure: str | None = None
    for n in ns:
        init = make_initial_state(init_family, n)
        try:
            traj = integrate(spec, init, T, grid, cfg, tail_cutoffs)
        except (IntegrationFailure, NumericsError) as exc:
            failure = f"n={n}: {exc}"
            break
        m1 = traj.moment_series(1.0)
        retention.append(float(m1[-1] / m1[0]) if m1[0] > 0 else 1.0)
        gel_times.append(estimate_gelation_time(traj, delta))
        if oracle_h is not None and n <= 64:
            oracle_errors[n] = oracle_compare(spec, init, T, cfg, oracle_h, samples)

    meta = {
        "T": T,
        "delta": delta,
        "gel_stab_rtol": gel_stab_rtol,
        "loss_halving": loss_halving,
        "zero_loss_floor": zero_loss_floor,
        "samples": samples,
    }
    if failure is not None:
        meta["failure"] = failure
        classification = "inconclusive"
    else:
        classification = _classify(
            retention, gel_times, gel_stab_rtol, loss_halving, zero_loss_floor
        )
    return ConvergenceReport(
        n_list=ns[: len(retention)],
        mass_retention=tuple(retention),
        gel_times=tuple(gel_times),
        classification=classification,
        oracle_errors=oracle_errors,
        meta=meta,
    )
