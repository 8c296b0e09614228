"""Time integration of the truncated system with integral accumulators.

The concentration vector is advanced together with a set of running
integrals (augmented state), so the integral quantities entering the
bound checks carry integrator-grade accuracy rather than sample-grid
quadrature error:

    I_theta_sq      integral of (sum_i theta_i omega_i)^2
    I_M1_sq         integral of M1^2
    I_M0_sq         integral of M0^2
    I_total_coag    integral of sum_i sum_{j>=i} Lambda_{i,j} omega_i omega_j
    I_tail_theta_sq(r), I_tail_coag(r)
                    tail versions starting at a registered cutoff r

Tail cutoffs must be registered before integration; the checkers refuse
unregistered cutoffs.

The default stepper is an explicit Dormand-Prince 5(4) embedded pair with
mixed absolute/relative error control per component.  Explicit stepping
can overshoot slightly below zero near extinct components; dips within
``clamp_tol`` are clamped back to zero on acceptance, anything worse
rejects the step and halves it.  A persistent failure to make progress
above ``h_min`` raises :class:`IntegrationFailure` carrying the last
accepted state.  A fixed-step classical 4th-order method is kept as the
brute-force reference; it lands exactly on the sample grid by subdividing
each grid interval into equal substeps no longer than its ``h``.

All time units are dimensionless.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._accum import exact_dot
from .errors import IntegrationFailure, NumericsError, ResolutionError
from .kernels import KernelSpec, theta_values
from .system import GeneralCore, SeparableCore, State, _acc_arrays

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0
ORDER_EXPONENT = -0.2  # error control for a 5th-order propagated solution

# Dormand-Prince 5(4) tableau
_A = (
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


@dataclass(frozen=True)
class IntegratorConfig:
    """Stepper selection and tolerances.

    ``h`` is the step ceiling of the fixed 4th-order method; ``h_init``,
    ``h_max`` and ``clamp_tol`` default to automatic choices (initial-step
    heuristic, grid span, 1e-12 times the largest initial concentration).
    """

    method: str = "adaptive_embedded_45"
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    h: float = 1e-3
    h_init: float | None = None
    h_min: float = 1e-14
    h_max: float | None = None
    clamp_tol: float | None = None

    def __post_init__(self):
        if self.method not in ("adaptive_embedded_45", "fixed_rk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.h <= 0 or self.h_min <= 0:
            raise ValueError("step sizes must be positive")
        if self.h_init is not None and self.h_init <= 0:
            raise ValueError("h_init must be positive")
        if self.h_max is not None and self.h_max <= 0:
            raise ValueError("h_max must be positive")
        if self.h_init is not None and self.h_init < self.h_min:
            raise ValueError("h_min must not exceed h_init")
        if (
            self.h_init is not None
            and self.h_max is not None
            and self.h_init > self.h_max
        ):
            raise ValueError("h_init must not exceed h_max")
        if self.clamp_tol is not None and self.clamp_tol < 0:
            raise ValueError("clamp_tol must be nonnegative")


@dataclass(frozen=True)
class IntegralAccumulators:
    """Running integrals at one sample time; all nondecreasing in time."""

    I_theta_sq: float
    I_M1_sq: float
    I_M0_sq: float
    I_total_coag: float
    I_tail_theta_sq: dict = field(default_factory=dict)
    I_tail_coag: dict = field(default_factory=dict)


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    rate_evals: int = 0


class _AugSystem:
    """Derivative of the augmented state [omega, accumulators]."""

    def __init__(self, spec: KernelSpec, n: int, tail_cutoffs: tuple[int, ...]):
        spec.check_range(n)
        cutoffs = tuple(sorted(set(int(r) for r in tail_cutoffs)))
        if any(r < 1 for r in cutoffs):
            raise ValueError("tail cutoffs must be positive cluster sizes")
        theta = theta_values(spec, n)
        self.spec = spec
        self.n = n
        self.cutoffs = cutoffs
        self.th_acc, self.iarr_acc = _acc_arrays(theta, n)
        self.u = spec.cross_factor if spec.separable else None
        self.u_theta = self.u * self.th_acc if self.u is not None else None
        self.dim = n + 4 + 2 * len(cutoffs)

    def core(self, omega: np.ndarray):
        if self.u is not None:
            return SeparableCore(self.th_acc, self.iarr_acc, self.u, omega, self.u_theta)
        return GeneralCore(self.spec, self.th_acc, self.iarr_acc, omega)

    def derivative(self, y: np.ndarray) -> np.ndarray:
        n = self.n
        core = self.core(y[:n])
        out = np.empty(self.dim)
        out[:n] = core.rate()
        T = core.T
        full_theta = float(T[0])
        m1 = float(np.dot(self.iarr_acc, core.om))
        m0 = float(core.om.sum())
        out[n] = full_theta * full_theta
        out[n + 1] = m1 * m1
        out[n + 2] = m0 * m0
        if self.u is not None:
            out[n + 3] = float(self.u * np.dot(core.x, T))
        else:
            out[n + 3] = float(np.dot(core.om, core.U))
        base = n + 4
        ncut = len(self.cutoffs)
        for k, r in enumerate(self.cutoffs):
            ts = float(T[r - 1]) if r <= n else 0.0
            out[base + k] = ts * ts
            if self.u is not None:
                out[base + ncut + k] = self.u * ts * ts
            elif r <= n:
                sl = slice(r - 1, None)
                out[base + ncut + k] = float(
                    2.0 * np.dot(core.om[sl], core.U[sl])
                    - np.dot(core.lam_diag[sl], core.om[sl] ** 2)
                )
            else:
                out[base + ncut + k] = 0.0
        return out


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-sampled states and running integrals of one integration.

    ``omegas[k]`` is the concentration vector at ``times[k]``; the
    accumulator arrays are indexed the same way.  The integrator config is
    kept so the bound checkers can derive their tolerances from it.
    """

    spec: KernelSpec
    cfg: IntegratorConfig
    tail_cutoffs: tuple[int, ...]
    times: np.ndarray
    omegas: np.ndarray
    acc_theta_sq: np.ndarray
    acc_m1_sq: np.ndarray
    acc_m0_sq: np.ndarray
    acc_total_coag: np.ndarray
    acc_tail_theta_sq: dict
    acc_tail_coag: dict
    step_stats: StepStats

    @property
    def n(self) -> int:
        return int(self.omegas.shape[1])

    @property
    def n_samples(self) -> int:
        return int(self.times.shape[0])

    def sample_index(self, t: float) -> int:
        """Index of the sample at time t (must match a grid point)."""
        k = int(np.argmin(np.abs(self.times - t)))
        span = float(self.times[-1]) or 1.0
        if abs(float(self.times[k]) - t) > 1e-9 * span:
            raise ValueError(f"t={t} is not a sample time of this trajectory")
        return k

    def state_at(self, k: int) -> State:
        return State(n=self.n, t=float(self.times[k]), omega=self.omegas[k].copy())

    def accumulators_at(self, k: int) -> IntegralAccumulators:
        return IntegralAccumulators(
            I_theta_sq=float(self.acc_theta_sq[k]),
            I_M1_sq=float(self.acc_m1_sq[k]),
            I_M0_sq=float(self.acc_m0_sq[k]),
            I_total_coag=float(self.acc_total_coag[k]),
            I_tail_theta_sq={r: float(v[k]) for r, v in self.acc_tail_theta_sq.items()},
            I_tail_coag={r: float(v[k]) for r, v in self.acc_tail_coag.items()},
        )

    def samples(self):
        for k in range(self.n_samples):
            yield float(self.times[k]), self.state_at(k), self.accumulators_at(k)

    def moment(self, k: int, m: float) -> float:
        i = np.arange(1, self.n + 1, dtype=float)
        return exact_dot(i**m, self.omegas[k])

    def moment_series(self, m: float) -> np.ndarray:
        i = np.arange(1, self.n + 1, dtype=float)
        w = i**m
        return np.array([exact_dot(w, self.omegas[k]) for k in range(self.n_samples)])


def uniform_grid(T: float, samples: int) -> np.ndarray:
    if samples < 2:
        raise ValueError("need at least two sample times")
    return np.linspace(0.0, T, samples)


def _validate_grid(grid: np.ndarray, T: float) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.shape[0] < 2:
        raise ValueError("grid must hold at least the two endpoints")
    if g[0] != 0.0:
        raise ValueError("grid must start at t = 0")
    if not (np.diff(g) > 0).all():
        raise ValueError("grid times must be strictly increasing")
    if abs(g[-1] - T) > 1e-12 * max(T, 1.0) or g[-1] > T * (1 + 1e-12):
        raise ValueError("grid must end at the horizon T")
    return g


class _Recorder:
    def __init__(self, sys_: _AugSystem, n_samples: int):
        n = sys_.n
        self.sys = sys_
        self.times = np.empty(n_samples)
        self.omegas = np.empty((n_samples, n))
        self.acc = np.empty((n_samples, 4))
        self.tail_theta = {r: np.empty(n_samples) for r in sys_.cutoffs}
        self.tail_coag = {r: np.empty(n_samples) for r in sys_.cutoffs}
        self.k = 0

    def record(self, t: float, y: np.ndarray) -> None:
        n = self.sys.n
        k = self.k
        self.times[k] = t
        self.omegas[k] = y[:n]
        self.acc[k] = y[n : n + 4]
        base = n + 4
        ncut = len(self.sys.cutoffs)
        for j, r in enumerate(self.sys.cutoffs):
            self.tail_theta[r][k] = y[base + j]
            self.tail_coag[r][k] = y[base + ncut + j]
        self.k += 1

    def build(self, spec, cfg, stats) -> Trajectory:
        return Trajectory(
            spec=spec,
            cfg=cfg,
            tail_cutoffs=self.sys.cutoffs,
            times=self.times,
            omegas=self.omegas,
            acc_theta_sq=self.acc[:, 0],
            acc_m1_sq=self.acc[:, 1],
            acc_m0_sq=self.acc[:, 2],
            acc_total_coag=self.acc[:, 3],
            acc_tail_theta_sq=self.tail_theta,
            acc_tail_coag=self.tail_coag,
            step_stats=stats,
        )


def _initial_step(f0: np.ndarray, y0: np.ndarray, cfg: IntegratorConfig, span: float) -> float:
    sc = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((y0 / sc) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / sc) ** 2)))
    if d1 <= 1e-300:
        return span
    h0 = 0.01 * max(d0, 1.0) / d1
    return min(h0, span)


def _clamp_accept(
    y_new: np.ndarray, y_old: np.ndarray, n: int, clamp_tol: float
) -> tuple[bool, bool]:
    """Clamp tiny negative concentrations; (accepted, modified).

    Accumulators are floored at their previous values (their integrands
    are nonnegative, so any decrease is stepper noise).
    """
    om = y_new[:n]
    low = float(om.min())
    if low < -clamp_tol:
        return False, False
    modified = low < 0.0 or bool((y_new[n:] < y_old[n:]).any())
    if modified:
        np.maximum(om, 0.0, out=om)
        np.maximum(y_new[n:], y_old[n:], out=y_new[n:])
    return True, modified


def _step_error(err: np.ndarray, y0: np.ndarray, y1: np.ndarray, cfg: IntegratorConfig) -> float:
    sc = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / sc) ** 2)))


def _run_adaptive(sys_: _AugSystem, y0, grid, cfg, rec, stats) -> None:
    f = sys_.derivative
    n = sys_.n
    clamp_tol = cfg.clamp_tol
    span = float(grid[-1])
    h_max = cfg.h_max if cfg.h_max is not None else span

    k1 = f(y0)
    stats.rate_evals += 1
    if not np.isfinite(k1).all():
        raise NumericsError("non-finite derivative at the initial state")
    h = cfg.h_init if cfg.h_init is not None else _initial_step(k1, y0, cfg, span)
    h = min(max(h, cfg.h_min), h_max)

    t = 0.0
    y = y0.copy()
    rec.record(0.0, y)
    ks = [k1] + [np.empty_like(y0) for _ in range(6)]
    have_k1 = True  # ks[0] valid for the current y (first-same-as-last reuse)

    for target in grid[1:]:
        target = float(target)
        while t < target:
            h_try = min(h, target - t)
            if h_try < cfg.h_min * 0.5:
                h_try = target - t  # sub-h_min remainder: finish the interval
            if not have_k1:
                ks[0] = f(y)
                stats.rate_evals += 1
                have_k1 = True
            bad = not np.isfinite(ks[0]).all()
            if not bad:
                for s in range(5):
                    ys = y + h_try * sum(
                        a * ks[j] for j, a in enumerate(_A[s]) if a != 0.0
                    )
                    ks[s + 1] = f(ys)
                    stats.rate_evals += 1
                    if not np.isfinite(ks[s + 1]).all():
                        bad = True
                        break
            if not bad:
                y_new = y + h_try * sum(
                    a * ks[j] for j, a in enumerate(_A[5]) if a != 0.0
                )
                k_last = f(y_new)
                stats.rate_evals += 1
                ks[6] = k_last
                err = h_try * sum(e * ks[j] for j, e in enumerate(_E) if e != 0.0)
                err_norm = _step_error(err, y, y_new, cfg)
                bad = not np.isfinite(err_norm) or not np.isfinite(y_new).all()
            if bad:
                err_norm = np.inf

            accepted = False
            if err_norm <= 1.0:
                accepted, modified = _clamp_accept(y_new, y, n, clamp_tol)
            if accepted:
                stats.accepted += 1
                t_new = t + h_try
                if target - t_new < 1e-14 * max(target, 1.0):
                    t_new = target
                t = t_new
                y = y_new
                if modified:
                    have_k1 = False
                else:
                    ks[0] = k_last
                if err_norm == 0.0:
                    fac = FAC_MAX
                else:
                    fac = min(FAC_MAX, max(FAC_MIN, SAFETY * err_norm**ORDER_EXPONENT))
                h = min(max(h_try * fac, cfg.h_min), h_max)
            else:
                stats.rejected += 1
                fac = 0.5
                if np.isfinite(err_norm) and err_norm > 1.0:
                    fac = min(1.0, max(FAC_MIN, SAFETY * err_norm**ORDER_EXPONENT))
                h_next = h_try * fac
                if h_next < cfg.h_min:
                    raise IntegrationFailure(
                        f"step size underflow at t={t:.6g} (needs h < h_min={cfg.h_min:g})",
                        t=t,
                        omega=y[:n].copy(),
                    )
                h = h_next
        rec.record(t, y)


def _run_fixed_rk4(sys_: _AugSystem, y0, grid, cfg, rec, stats) -> None:
    f = sys_.derivative
    n = sys_.n
    clamp_tol = cfg.clamp_tol
    y = y0.copy()
    k1 = f(y)
    stats.rate_evals += 1
    if not np.isfinite(k1).all():
        raise NumericsError("non-finite derivative at the initial state")
    rec.record(0.0, y)
    t = 0.0
    for target in grid[1:]:
        target = float(target)
        delta = target - t
        n_sub = max(1, int(np.ceil(delta / cfg.h - 1e-12)))
        h = delta / n_sub
        for _ in range(n_sub):
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            stats.rate_evals += 4
            y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.isfinite(y_new).all():
                raise NumericsError(f"non-finite state in fixed-step run near t={t:.6g}")
            ok, _ = _clamp_accept(y_new, y, n, clamp_tol)
            if not ok:
                raise IntegrationFailure(
                    f"fixed step h={cfg.h:g} too coarse: concentration dipped below "
                    f"-clamp_tol near t={t:.6g}",
                    t=t,
                    omega=y[:n].copy(),
                )
            y = y_new
            stats.accepted += 1
            t += h
        t = target
        rec.record(t, y)


def integrate(
    spec: KernelSpec,
    init: State,
    T: float,
    grid,
    cfg: IntegratorConfig | None = None,
    tail_cutoffs: tuple[int, ...] = (),
) -> Trajectory:
    """Advance the truncated system to time T, sampling on ``grid``.

    ``grid`` must start at 0 and end at T.  Tail cutoffs registered here
    are the only ones available to the tail bound checks afterwards.
    """
    cfg = cfg or IntegratorConfig()
    if T <= 0:
        raise ValueError("horizon T must be positive")
    g = _validate_grid(grid, T)
    sys_ = _AugSystem(spec, init.n, tail_cutoffs)
    if cfg.clamp_tol is None:
        scale = float(init.omega.max(initial=0.0))
        cfg = replace(cfg, clamp_tol=1e-12 * scale)
    y0 = np.zeros(sys_.dim)
    y0[: init.n] = init.omega
    rec = _Recorder(sys_, g.shape[0])
    stats = StepStats()
    if cfg.method == "fixed_rk4":
        _run_fixed_rk4(sys_, y0, g, cfg, rec, stats)
    else:
        _run_adaptive(sys_, y0, g, cfg, rec, stats)
    return rec.build(spec, cfg, stats)


def solution_residual(traj: Trajectory, i: int, t1: float, t2: float) -> float:
    """Defect of the integral form of component i between two sample times.

    Returns omega_i(t2) - omega_i(t1) minus the trapezoid quadrature of
    the rate over the samples in [t1, t2]; small for a healthy run.
    """
    if not (1 <= i <= traj.n):
        raise ValueError(f"component index must lie in 1..{traj.n}")
    k1 = traj.sample_index(t1)
    k2 = traj.sample_index(t2)
    if k2 <= k1:
        raise ValueError("t1 must precede t2")
    if k2 - k1 + 1 < 4:
        raise ResolutionError("need at least 4 samples between t1 and t2")
    sys_ = _AugSystem(traj.spec, traj.n, ())
    rates = np.array(
        [sys_.core(traj.omegas[k]).rate()[i - 1] for k in range(k1, k2 + 1)]
    )
    quad = float(np.trapezoid(rates, traj.times[k1 : k2 + 1]))
    return float(traj.omegas[k2, i - 1] - traj.omegas[k1, i - 1] - quad)
