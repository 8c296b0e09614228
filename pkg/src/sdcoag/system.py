"""Right-hand side of the size-truncated coagulation ODE system.

The model tracks concentrations ``omega_i`` of clusters holding ``i``
monomers, ``i = 1..n``.  A collision between a cluster of size ``i`` and
a smaller or equal partner of size ``j`` shatters the partner into ``j``
monomers that the larger cluster absorbs, so clusters climb the size
ladder in unit steps while collisions with larger partners remove them
outright.  Component ``i`` of the rate vector is

    omega_{i-1} * S_{i-1}  -  omega_i * S_i  -  omega_i * U_i

with the j-weighted partial sum ``S_i = sum_{j<=i} j * Lambda_{i,j} * omega_j``
(the production sum is empty for i = 1) and the depletion tail
``U_i = sum_{j>=i} Lambda_{i,j} * omega_j``.

Two evaluators are provided.  The general one walks kernel rows and costs
O(n^2); it works for every kernel form and serves as the reference.  For
separable kernels, ``Lambda = (1+c) * theta_i * theta_j``, the same sums
factorise through one prefix and one suffix pass over ``theta_i * omega_i``:

    S_i = (1+c) * theta_i * P_i,   P_i = sum_{j<=i} j * theta_j * omega_j
    U_i = (1+c) * theta_i * T_i,   T_i = sum_{j>=i} theta_j * omega_j

which gives an O(n) evaluation.  Both paths reduce in ascending index
order using the accumulator precision from ``_accum`` and round to double
once, after the final combination; this keeps the two paths within the
1e-12 normalized agreement contract on generic states.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accum import ACC_DTYPE, running_sum, running_suffix_sum
from .errors import NumericsError, UnsupportedKernelError
from .kernels import KernelSpec, theta_values


@dataclass(frozen=True, eq=False)
class State:
    """Concentration vector of a truncated system at one time.

    Entries must be nonnegative (the model lives in the nonnegative
    cone).  Non-finite entries pass construction and are rejected by the
    rate evaluators, which own the numeric-input contract.
    """

    n: int
    t: float
    omega: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        if om.ndim != 1 or om.shape[0] != self.n:
            raise ValueError(f"omega must be a vector of length n={self.n}")
        if (om < 0).any():
            raise ValueError("concentrations must be nonnegative")
        if self.t < 0:
            raise ValueError("time must be nonnegative")
        object.__setattr__(self, "omega", om)


@dataclass(frozen=True, eq=False)
class InitialData:
    """Initial concentration family evaluated on demand for any truncation size.

    monodisperse(a)      only monomers: omega_1 = a
    geometric(a, r)      omega_i = a * r**i, 0 < r < 1
    power_tail(a, q)     omega_i = a * i**(-q), q > 1: finite particle
                         count, while for q <= 2 the total mass grows
                         without bound as the truncation size grows
    table(values)        explicit nonnegative entries
    """

    family: str
    a: float = 1.0
    r: float = 0.5
    q: float = 1.5
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.family in ("monodisperse", "geometric", "power_tail"):
            if self.a < 0:
                raise ValueError("amplitude a must be nonnegative")
        if self.family == "geometric" and not (0.0 < self.r < 1.0):
            raise ValueError("geometric ratio r must lie in (0, 1)")
        if self.family == "power_tail" and not (self.q > 1.0):
            raise ValueError("power_tail exponent q must exceed 1")
        if self.family == "table":
            vals = np.asarray(self.values, dtype=float)
            if vals.ndim != 1 or vals.size == 0:
                raise ValueError("table form requires a 1-d value array")
            if (vals < 0).any() or not np.isfinite(vals).all():
                raise ValueError("table values must be finite and nonnegative")
            object.__setattr__(self, "values", vals)
        elif self.family not in ("monodisperse", "geometric", "power_tail"):
            raise ValueError(f"unknown initial-data family {self.family!r}")

    @classmethod
    def monodisperse(cls, a: float) -> "InitialData":
        return cls(family="monodisperse", a=a)

    @classmethod
    def geometric(cls, a: float, r: float) -> "InitialData":
        return cls(family="geometric", a=a, r=r)

    @classmethod
    def power_tail(cls, a: float, q: float) -> "InitialData":
        return cls(family="power_tail", a=a, q=q)

    @classmethod
    def table(cls, values) -> "InitialData":
        return cls(family="table", values=np.asarray(values, dtype=float))

    def concentrations(self, n: int) -> np.ndarray:
        i = np.arange(1, n + 1, dtype=float)
        if self.family == "monodisperse":
            om = np.zeros(n)
            om[0] = self.a
            return om
        if self.family == "geometric":
            return self.a * self.r**i
        if self.family == "power_tail":
            return self.a * i ** (-self.q)
        if n > self.values.shape[0]:
            raise ValueError(f"table holds {self.values.shape[0]} entries, need {n}")
        return self.values[:n].copy()


def make_initial_state(family: InitialData, n: int) -> State:
    """Instantiate the family on sizes 1..n at time zero."""
    if n < 1:
        raise ValueError("truncation size n must be positive")
    return State(n=n, t=0.0, omega=family.concentrations(n))


def _require_finite(omega: np.ndarray) -> None:
    if not np.isfinite(omega).all():
        raise NumericsError("non-finite concentration in rate evaluation")


class SeparableCore:
    """Per-evaluation intermediates of the O(n) path, accumulator precision.

    Exposes exactly what the integrator needs to advance the integral
    accumulators without re-deriving any sums: ``x = theta * omega`` and
    its suffix sums ``T`` alongside ``S`` and ``U``.
    """

    __slots__ = ("om", "S", "U", "x", "T", "u")

    def __init__(
        self,
        theta_acc: np.ndarray,
        iarr_acc: np.ndarray,
        u: float,
        omega: np.ndarray,
        u_theta: np.ndarray | None = None,
    ):
        om = omega.astype(ACC_DTYPE)
        x = theta_acc * om
        P = running_sum(iarr_acc * x)
        T = running_suffix_sum(x)
        if u_theta is None:
            u_theta = u * theta_acc
        self.om = om
        self.x = x
        self.T = T
        self.S = u_theta * P
        self.U = u_theta * T
        self.u = u

    def rate(self) -> np.ndarray:
        return _combine(self.om, self.S, self.U)


class GeneralCore:
    """Per-evaluation intermediates of the O(n^2) row-walking path."""

    __slots__ = ("om", "S", "U", "x", "T", "lam_diag")

    def __init__(self, spec: KernelSpec, theta_acc: np.ndarray, iarr_acc: np.ndarray, omega: np.ndarray):
        n = omega.shape[0]
        om = omega.astype(ACC_DTYPE)
        jw = (np.arange(1, n + 1, dtype=float) * omega).astype(ACC_DTYPE)
        kappa_mat = spec.kappa.matrix if spec.kappa.form == "table" else None
        scale = 1.0 if kappa_mat is not None else (spec.cross_factor if spec.separable else 1.0)
        S = np.empty(n, dtype=ACC_DTYPE)
        U = np.empty(n, dtype=ACC_DTYPE)
        lam_diag = np.empty(n, dtype=ACC_DTYPE)
        for idx in range(n):
            row = (scale * theta_acc[idx]) * theta_acc
            if kappa_mat is not None:
                row = row + kappa_mat[idx, :n]
            S[idx] = np.dot(row[: idx + 1], jw[: idx + 1])
            U[idx] = np.dot(row[idx:], om[idx:])
            lam_diag[idx] = row[idx]
        self.om = om
        self.S = S
        self.U = U
        self.x = theta_acc * om
        self.T = running_suffix_sum(self.x)
        self.lam_diag = lam_diag

    def rate(self) -> np.ndarray:
        return _combine(self.om, self.S, self.U)


def _combine(om: np.ndarray, S: np.ndarray, U: np.ndarray) -> np.ndarray:
    w = om * S
    out = np.empty_like(w)
    out[0] = 0.0
    out[1:] = w[:-1]
    out -= w
    out -= om * U
    return out.astype(np.float64)


def _acc_arrays(theta: np.ndarray, n: int):
    return theta.astype(ACC_DTYPE), np.arange(1, n + 1, dtype=np.float64).astype(ACC_DTYPE)


def rhs_general(spec: KernelSpec, state: State) -> np.ndarray:
    """O(n^2) rate vector valid for every kernel form."""
    _require_finite(state.omega)
    spec.check_range(state.n)
    theta = theta_values(spec, state.n)
    th_acc, iarr_acc = _acc_arrays(theta, state.n)
    return GeneralCore(spec, th_acc, iarr_acc, state.omega).rate()


def rhs_separable_fast(spec: KernelSpec, state: State) -> np.ndarray:
    """O(n) rate vector via prefix/suffix factorisation of a separable kernel."""
    if not spec.separable:
        raise UnsupportedKernelError("fast path requires a zero or scaled-product cross term")
    _require_finite(state.omega)
    spec.check_range(state.n)
    theta = theta_values(spec, state.n)
    th_acc, iarr_acc = _acc_arrays(theta, state.n)
    return SeparableCore(th_acc, iarr_acc, spec.cross_factor, state.omega).rate()
