"""Moments, weak-form functionals and certified inequality checks.

Weak form.  Multiplying component ``i`` of the truncated system by a
nonnegative weight ``psi_i`` and summing, the production term reindexes
(``i -> i+1``) against the first loss term and leaves a boundary piece at
``i = n``, giving the identity used by every moment estimate here:

    d/dt sum_i psi_i omega_i
        =   sum_{i=1}^{n-1} (psi_{i+1} - psi_i) * omega_i * S_i
          - psi_n * omega_n * S_n
          - sum_{i=1}^{n} psi_i * omega_i * U_i

with ``S_i = sum_{j<=i} j Lambda_{i,j} omega_j`` and
``U_i = sum_{j>=i} Lambda_{i,j} omega_j``.  The boundary piece is where
mass leaves a truncated run; the last sum is the depletion by larger
partners.  ``weak_form_residual`` verifies this identity on a sampled
trajectory by trapezoid quadrature.

Bound reports.  Each checker instantiates one proved inequality on a
trajectory and reports lhs, rhs, margin and a verdict.  The comparison
tolerance is ``1e-7 * scale + 10 * (rel_tol * scale + abs_tol)`` with
``scale = max(|lhs|, |rhs|)`` and the integrator tolerances taken from
the trajectory; it is recorded in every report.  A check whose
hypotheses are not certified for the kernel at hand (no positive linear
floor, no stable lower-bound constant) reports itself inapplicable and
passes vacuously, with the reason in ``params``.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import numpy as np

from ._accum import exact_dot
from .errors import ResolutionError
from .integrate import Trajectory, _AugSystem
from .kernels import ClassReport, classify_kernel, lower_bound_constants
from .system import State

M0_MONOTONE_RTOL = 1e-9
DEFAULT_DELTA = 0.01
DEFAULT_ETA = 0.5

BOUND_IDS = (
    "EST1",
    "EST2",
    "EST3",
    "TAILEST",
    "MASSRBND",
    "GEL_M1INT",
    "GEL_PRODUCT",
    "GEL_INFMASS",
    "APPENDIX_M0",
    "AMC",
    "FM",
)


@dataclass(frozen=True)
class BoundReport:
    """One proved inequality instantiated on a trajectory."""

    bound_id: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    params: dict = field(default_factory=dict)
    tolerance_used: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "bound_id": self.bound_id,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "pass": self.passed,
            "params": self.params,
            "tolerance_used": self.tolerance_used,
        }


@dataclass(frozen=True, eq=False)
class TestSequence:
    """Nonnegative weight sequence for the weak form."""

    __test__ = False  # not a pytest class despite the name

    form: str  # constant_one | identity | capped | power | table
    r: int = 1
    eta: float = DEFAULT_ETA
    values: np.ndarray | None = None

    @classmethod
    def constant_one(cls) -> "TestSequence":
        return cls(form="constant_one")

    @classmethod
    def identity(cls) -> "TestSequence":
        return cls(form="identity")

    @classmethod
    def capped(cls, r: int) -> "TestSequence":
        if r < 1:
            raise ValueError("cap must be a positive size")
        return cls(form="capped", r=r)

    @classmethod
    def power(cls, eta: float) -> "TestSequence":
        if eta < 0:
            raise ValueError("power exponent must be nonnegative")
        return cls(form="power", eta=eta)

    @classmethod
    def table(cls, values) -> "TestSequence":
        vals = np.asarray(values, dtype=float)
        if (vals < 0).any():
            raise ValueError("weights must be nonnegative")
        return cls(form="table", values=vals)

    def weights(self, n: int) -> np.ndarray:
        i = np.arange(1, n + 1, dtype=float)
        if self.form == "constant_one":
            return np.ones(n)
        if self.form == "identity":
            return i
        if self.form == "capped":
            return np.minimum(i, float(self.r))
        if self.form == "power":
            return i**self.eta
        if self.values.shape[0] < n:
            raise ValueError(f"weight table holds {self.values.shape[0]} entries, need {n}")
        return self.values[:n].copy()


def moment(state: State, m: float) -> float:
    """sum_i i**m omega_i, exactly rounded."""
    if m < 0:
        raise ValueError("moment order must be nonnegative")
    i = np.arange(1, state.n + 1, dtype=float)
    return exact_dot(i**m, state.omega)


def sum_inverse_powers(s: float, n_direct: int = 2000) -> float:
    """sum_{i>=1} i**(-s) for s > 1, direct terms plus an integral-tail correction.

    The correction uses the standard asymptotic expansion of the tail;
    with the default number of direct terms the result is accurate far
    below 1e-6 for every s > 1.02 used by the checks.
    """
    if s <= 1.0:
        raise ValueError("series diverges for s <= 1")
    N = n_direct
    head = math.fsum((i ** (-s) for i in range(1, N)))
    # tail_{i>=N}: N^(1-s)/(s-1) + N^-s/2 + s N^-(s+1)/12 - s(s+1)(s+2) N^-(s+3)/720
    tail = (
        N ** (1.0 - s) / (s - 1.0)
        + 0.5 * N ** (-s)
        + s * N ** (-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * N ** (-s - 3.0) / 720.0
    )
    return head + tail


def _tolerance(traj: Trajectory, lhs: float, rhs: float) -> float:
    scale = max(abs(lhs), abs(rhs))
    cfg = traj.cfg
    return 1e-7 * scale + 10.0 * (cfg.rel_tol * scale + cfg.abs_tol)


def _report(traj, bound_id, lhs, rhs, params) -> BoundReport:
    tol = _tolerance(traj, lhs, rhs)
    return BoundReport(
        bound_id=bound_id,
        lhs=float(lhs),
        rhs=float(rhs),
        margin=float(rhs - lhs),
        passed=bool(lhs <= rhs + tol),
        params=params,
        tolerance_used=tol,
    )


def _inapplicable(bound_id: str, reason: str, params: dict | None = None) -> BoundReport:
    p = {"inapplicable": True, "reason": reason}
    if params:
        p.update(params)
    return BoundReport(
        bound_id=bound_id, lhs=0.0, rhs=0.0, margin=0.0, passed=True, params=p,
        tolerance_used=0.0,
    )


def _tail_increment(series: dict, r: int, k1: int, k2: int, what: str) -> float:
    if r not in series:
        raise ValueError(
            f"tail cutoff r={r} was not registered before integration ({what}); "
            f"registered: {sorted(series)}"
        )
    arr = series[r]
    return float(arr[k2] - arr[k1])


def _probe_size(traj: Trajectory) -> int:
    return max(8, traj.n)


def weak_form_residual(traj: Trajectory, psi: TestSequence, t1: float, t2: float) -> float:
    """Defect of the weak-form identity for weights psi between two sample times."""
    k1 = traj.sample_index(t1)
    k2 = traj.sample_index(t2)
    if k2 <= k1:
        raise ValueError("t1 must precede t2")
    if k2 - k1 + 1 < 4:
        raise ResolutionError("need at least 4 samples between t1 and t2")
    n = traj.n
    w = psi.weights(n)
    sys_ = _AugSystem(traj.spec, n, ())
    dw = w[1:] - w[:-1]
    integrand = np.empty(k2 - k1 + 1)
    for k in range(k1, k2 + 1):
        core = sys_.core(traj.omegas[k])
        om_s = (core.om * core.S).astype(float)
        depl = float(exact_dot(w, (core.om * core.U).astype(float)))
        ladder = float(exact_dot(dw, om_s[:-1])) if n > 1 else 0.0
        boundary = w[-1] * om_s[-1]
        integrand[k - k1] = ladder - boundary - depl
    quad = float(np.trapezoid(integrand, traj.times[k1 : k2 + 1]))
    lhs = exact_dot(w, traj.omegas[k2]) - exact_dot(w, traj.omegas[k1])
    return float(lhs - quad)


def check_est1(traj: Trajectory, t1: float, t2: float) -> BoundReport:
    """Total mass non-increasing: M1(t2) <= M1(t1) <= M1(0)."""
    k1 = traj.sample_index(t1)
    k2 = traj.sample_index(t2)
    m1_t2 = traj.moment(k2, 1.0)
    m1_t1 = traj.moment(k1, 1.0)
    m1_0 = traj.moment(0, 1.0)
    rep = _report(traj, "EST1", m1_t2, m1_t1, {"t1": t1, "t2": t2, "m1_initial": m1_0})
    tol0 = _tolerance(traj, m1_t1, m1_0)
    if m1_t1 > m1_0 + tol0:
        rep = BoundReport(
            bound_id=rep.bound_id, lhs=rep.lhs, rhs=rep.rhs, margin=rep.margin,
            passed=False, params=dict(rep.params, initial_clause_violated=True),
            tolerance_used=rep.tolerance_used,
        )
    return rep


def check_est2(traj: Trajectory, t1: float, t2: float) -> BoundReport:
    """Particle count plus half the squared theta-sum integral is non-increasing."""
    k1 = traj.sample_index(t1)
    k2 = traj.sample_index(t2)
    lhs = traj.moment(k2, 0.0) + 0.5 * float(traj.acc_theta_sq[k2] - traj.acc_theta_sq[k1])
    rhs = traj.moment(k1, 0.0)
    return _report(traj, "EST2", lhs, rhs, {"t1": t1, "t2": t2})


def check_est3(traj: Trajectory, r: int, eta: float, t1: float, t2: float) -> BoundReport:
    """Tail theta-sum square integral against the eta-moment at t1."""
    if not (0.0 < eta < 1.0):
        raise ValueError("eta must lie strictly between 0 and 1")
    k1 = traj.sample_index(t1)
    k2 = traj.sample_index(t2)
    lhs = _tail_increment(traj.acc_tail_theta_sq, r, k1, k2, "EST3")
    rhs = 2.0 * traj.moment(k1, eta) * float(r) ** (-eta)
    return _report(traj, "EST3", lhs, rhs, {"r": r, "eta": eta, "t1": t1, "t2": t2})


def check_tailest(traj: Trajectory, r: int, t1: float, t2: float) -> BoundReport:
    """Tail coagulation activity against (2/r) times the mass at t1."""
    k1 = traj.sample_index(t1)
    k2 = traj.sample_index(t2)
    lhs = _tail_increment(traj.acc_tail_coag, r, k1, k2, "TAILEST")
    rhs = (2.0 / float(r)) * traj.moment(k1, 1.0)
    return _report(traj, "TAILEST", lhs, rhs, {"r": r, "t1": t1, "t2": t2})


def _linear_floor(traj: Trajectory, B: float | None, report: ClassReport | None = None):
    """Resolve the linear growth floor; None with a reason when not certified."""
    if B is not None:
        if B <= 0:
            return None, None, "provided B is not positive"
        return B, report, None
    rep = report or classify_kernel(traj.spec, _probe_size(traj))
    if traj.spec.declared_class == "sublinear" or rep.sublinear_trend:
        return None, rep, "kernel growth is sublinear (theta_i/i decays over the probe)"
    if rep.B <= 0:
        return None, rep, "probed linear floor is zero"
    return rep.B, rep, None


def check_massrbnd(traj: Trajectory, t: float, B: float | None = None) -> BoundReport:
    """Mass decay M1(t) <= (2/B) sqrt(M0(0)) / sqrt(t) at one positive time."""
    if t <= 0:
        raise ValueError("the decay bound needs t > 0")
    Bv, _, reason = _linear_floor(traj, B)
    if Bv is None:
        return _inapplicable("MASSRBND", reason, {"t": t})
    k = traj.sample_index(t)
    lhs = traj.moment(k, 1.0)
    rhs = (2.0 / Bv) * math.sqrt(traj.moment(0, 0.0)) / math.sqrt(t)
    return _report(traj, "MASSRBND", lhs, rhs, {"t": t, "B": Bv})


def check_gel_infmass(traj: Trajectory, B: float | None = None) -> BoundReport:
    """The square-root mass decay bound at every sampled positive time.

    Same inequality as MASSRBND; reported at the worst sampled time.  This
    is the certificate that stays informative when the initial mass grows
    without bound in n (the count moment M0 does not).
    """
    Bv, _, reason = _linear_floor(traj, B)
    if Bv is None:
        return _inapplicable("GEL_INFMASS", reason)
    m0_root = math.sqrt(traj.moment(0, 0.0))
    worst = None
    for k in range(1, traj.n_samples):
        t = float(traj.times[k])
        lhs = traj.moment(k, 1.0)
        rhs = (2.0 / Bv) * m0_root / math.sqrt(t)
        if worst is None or lhs - rhs > worst[0]:
            worst = (lhs - rhs, lhs, rhs, t)
    if worst is None:
        return _inapplicable("GEL_INFMASS", "no positive sample times")
    _, lhs, rhs, t = worst
    return _report(traj, "GEL_INFMASS", lhs, rhs, {"B": Bv, "worst_t": t})


def check_gel_product(traj: Trajectory, zeta: float, t: float) -> BoundReport:
    """Product-kernel mass decay M1(t) <= sqrt(2 M1(0) / (zeta t))."""
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    if t <= 0:
        raise ValueError("the decay bound needs t > 0")
    k = traj.sample_index(t)
    lhs = traj.moment(k, 1.0)
    rhs = math.sqrt(2.0 * traj.moment(0, 1.0) / (zeta * t))
    return _report(traj, "GEL_PRODUCT", lhs, rhs, {"zeta": zeta, "t": t})


def check_m1_square_integral(traj: Trajectory, C: float, kappa0: float) -> BoundReport:
    """Integral of M1^2 over the run against the derived constant D * M1(0).

    D = 2 * j**2 / C with j = sum_i i**(-(kappa0+1)/2), the composition of
    the tail-estimate chain that forces the mass into L^2 in time when the
    kernel grows at least like (i*j)**(kappa0/2).
    """
    if C <= 0:
        raise ValueError("C must be positive")
    if not (1.0 < kappa0 < 2.0):
        raise ValueError("kappa0 must lie strictly between 1 and 2")
    j = sum_inverse_powers((kappa0 + 1.0) / 2.0)
    D = 2.0 * j * j / C
    lhs = float(traj.acc_m1_sq[-1])
    rhs = D * traj.moment(0, 1.0)
    return _report(
        traj, "GEL_M1INT", lhs, rhs,
        {"C": C, "kappa0": kappa0, "j_series": j, "D": D, "T": float(traj.times[-1])},
    )


def check_appendix_m0(traj: Trajectory, C: float | None = None) -> BoundReport:
    """Particle count decays: M0 non-increasing and the M0^2 integral bounded.

    Needs a certified uniform kernel floor C with Lambda >= C at all
    probed pairs; inapplicable when the probe minimum decays.
    """
    if C is None:
        lb = lower_bound_constants(traj.spec, _probe_size(traj))
        if lb.lambda_min is None:
            return _inapplicable(
                "APPENDIX_M0",
                "no stable uniform kernel floor over the probe",
                {"probe_min": lb.probe_minima.get("lambda_min")},
            )
        C = lb.lambda_min
    elif C <= 0:
        return _inapplicable("APPENDIX_M0", "provided C is not positive")
    m0 = traj.moment_series(0.0)
    rises = np.diff(m0)
    worst_rise = float(rises.max()) if rises.size else 0.0
    monotone_ok = worst_rise <= M0_MONOTONE_RTOL * m0[0]
    lhs = float(traj.acc_m0_sq[-1])
    rhs = (2.0 / C) * float(m0[0])
    rep = _report(
        traj, "APPENDIX_M0", lhs, rhs,
        {"C": C, "worst_m0_rise": worst_rise, "monotone_ok": bool(monotone_ok),
         "T": float(traj.times[-1])},
    )
    if not monotone_ok:
        rep = BoundReport(
            bound_id=rep.bound_id, lhs=rep.lhs, rhs=rep.rhs, margin=rep.margin,
            passed=False, params=rep.params, tolerance_used=rep.tolerance_used,
        )
    return rep


def check_amc(traj: Trajectory) -> BoundReport:
    """Mass never exceeds its initial value, at any sampled time."""
    m1_0 = traj.moment(0, 1.0)
    worst = None
    for k in range(traj.n_samples):
        lhs = traj.moment(k, 1.0)
        if worst is None or lhs > worst[0]:
            worst = (lhs, float(traj.times[k]))
    lhs, t = worst
    return _report(traj, "AMC", lhs, m1_0, {"worst_t": t})


def check_fm(traj: Trajectory) -> BoundReport:
    """Finiteness certificate: all sampled concentrations and masses finite."""
    finite = bool(np.isfinite(traj.omegas).all())
    m1 = traj.moment_series(1.0)
    finite = finite and bool(np.isfinite(m1).all())
    lhs = float(np.max(m1)) if finite else math.inf
    rhs = sys.float_info.max
    return BoundReport(
        bound_id="FM", lhs=lhs, rhs=rhs, margin=rhs - lhs if finite else -math.inf,
        passed=finite, params={"finiteness_check": True}, tolerance_used=0.0,
    )


def evaluate_suite(
    traj: Trajectory,
    bounds: tuple[str, ...] = BOUND_IDS,
    *,
    eta: float = DEFAULT_ETA,
    kappa0: float = 1.5,
    B: float | None = None,
    C: float | None = None,
    zeta: float | None = None,
    n_probe: int | None = None,
) -> list[BoundReport]:
    """Evaluate the requested bounds over a whole trajectory.

    Monotone estimates are scanned over adjacent sample pairs and reported
    at the worst pair; time-pointwise decay bounds at the worst sampled
    time; tail estimates once per registered cutoff over the full window.
    Kernel constants come from the probe unless overridden; an explicit C
    override feeds the kappa0-power floor (GEL_M1INT), while the
    particle-count decay check derives its uniform floor from the probe.
    """
    unknown = [b for b in bounds if b not in BOUND_IDS]
    if unknown:
        raise ValueError(f"unknown bound ids {unknown}")
    probe = n_probe if n_probe is not None else _probe_size(traj)
    lb = lower_bound_constants(traj.spec, probe, kappa0)
    B_eff, _, b_reason = _linear_floor(traj, B, lb)
    C_eff = C if C is not None else lb.C
    zeta_eff = zeta if zeta is not None else lb.zeta

    times = traj.times
    m0 = traj.moment_series(0.0)
    m1 = traj.moment_series(1.0)
    reports: list[BoundReport] = []
    T_end = float(times[-1])

    for bound in bounds:
        if bound == "EST1":
            k = int(np.argmax(np.diff(m1))) if traj.n_samples > 1 else 0
            reports.append(check_est1(traj, float(times[k]), float(times[k + 1])))
        elif bound == "EST2":
            gain = (m0[1:] + 0.5 * np.diff(traj.acc_theta_sq)) - m0[:-1]
            k = int(np.argmax(gain)) if traj.n_samples > 1 else 0
            reports.append(check_est2(traj, float(times[k]), float(times[k + 1])))
        elif bound == "EST3":
            for r in traj.tail_cutoffs:
                reports.append(check_est3(traj, r, eta, 0.0, T_end))
        elif bound == "TAILEST":
            for r in traj.tail_cutoffs:
                reports.append(check_tailest(traj, r, 0.0, T_end))
        elif bound == "MASSRBND":
            if B_eff is None:
                reports.append(_inapplicable("MASSRBND", b_reason))
            else:
                rhs = (2.0 / B_eff) * math.sqrt(m0[0]) / np.sqrt(times[1:])
                k = int(np.argmax(m1[1:] - rhs)) + 1
                reports.append(check_massrbnd(traj, float(times[k]), B_eff))
        elif bound == "GEL_INFMASS":
            reports.append(check_gel_infmass(traj, B_eff) if B_eff is not None
                           else _inapplicable("GEL_INFMASS", b_reason))
        elif bound == "GEL_PRODUCT":
            if zeta_eff is None:
                reports.append(_inapplicable(
                    "GEL_PRODUCT",
                    "no stable product-kernel floor zeta over the probe",
                    {"probe_min": lb.probe_minima.get("zeta")},
                ))
            elif m1[0] == 0.0:
                reports.append(check_gel_product(traj, zeta_eff, T_end))
            else:
                rhs = np.sqrt(2.0 * m1[0] / (zeta_eff * times[1:]))
                k = int(np.argmax(m1[1:] - rhs)) + 1
                reports.append(check_gel_product(traj, zeta_eff, float(times[k])))
        elif bound == "GEL_M1INT":
            if C_eff is None:
                reports.append(_inapplicable(
                    "GEL_M1INT",
                    "no stable kappa0-power kernel floor C over the probe",
                    {"kappa0": kappa0, "probe_min": lb.probe_minima.get("C")},
                ))
            else:
                reports.append(check_m1_square_integral(traj, C_eff, kappa0))
        elif bound == "APPENDIX_M0":
            reports.append(check_appendix_m0(traj))
        elif bound == "AMC":
            reports.append(check_amc(traj))
        elif bound == "FM":
            reports.append(check_fm(traj))
    return reports


def estimate_gelation_time(traj: Trajectory, delta: float = DEFAULT_DELTA) -> float | None:
    """First time the sampled mass drops below (1 - delta) of its initial value.

    Linearly interpolated between the bracketing samples; None when the
    threshold is never crossed.  For a truncated run this is a surrogate
    whose behaviour under growing n is what the refinement study
    classifies.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie strictly between 0 and 1")
    m1 = traj.moment_series(1.0)
    threshold = (1.0 - delta) * m1[0]
    below = np.nonzero(m1 < threshold)[0]
    if below.size == 0 or m1[0] == 0.0:
        return None
    k = int(below[0])
    if k == 0:
        return 0.0
    t_lo, t_hi = float(traj.times[k - 1]), float(traj.times[k])
    v_lo, v_hi = float(m1[k - 1]), float(m1[k])
    return t_lo + (threshold - v_lo) * (t_hi - t_lo) / (v_hi - v_lo)
