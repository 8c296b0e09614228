"""Parametric coagulation kernels of product-plus-cross-term form.

A kernel is ``Lambda[i, j] = theta_i * theta_j + kappa[i, j]`` where
``theta`` is a nonnegative sequence over cluster sizes and ``kappa`` is a
symmetric nonnegative correction bounded by a multiple of the product
term.  Two growth regimes matter downstream: sequences growing at least
linearly in the index (probed floor ``B = min theta_i / i`` stays away
from zero) admit the square-root mass decay bound, while sublinear
sequences (ratio decaying along the probe) admit no such certificate.

Lower-bound constants for the gelation checks are infima of
``Lambda / (i*j)**e`` over a finite probe square.  A finite probe cannot
certify an infimum over all sizes, so a constant is reported only when
the probe minimum is stable under enlarging the probe; a shrinking
minimum is flagged as decaying and the constant is withheld.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ClassificationError, KernelRangeError

DECAY_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class ThetaSequence:
    """Nonnegative sequence theta_i, either a power law or an explicit table."""

    form: str  # "power" | "table"
    a: float = 1.0
    p: float = 1.0
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.form == "power":
            if not (self.a > 0):
                raise ValueError("power form requires a > 0")
            if self.p < 0:
                raise ValueError("power form requires p >= 0")
        elif self.form == "table":
            vals = np.asarray(self.values, dtype=float)
            if vals.ndim != 1 or vals.size == 0:
                raise ValueError("table form requires a 1-d value array")
            if (vals < 0).any() or not np.isfinite(vals).all():
                raise ValueError("table values must be finite and nonnegative")
            object.__setattr__(self, "values", vals)
        else:
            raise ValueError(f"unknown theta form {self.form!r}")

    @classmethod
    def power(cls, a: float, p: float) -> "ThetaSequence":
        return cls(form="power", a=a, p=p)

    @classmethod
    def table(cls, values) -> "ThetaSequence":
        return cls(form="table", values=np.asarray(values, dtype=float))

    @property
    def max_index(self) -> int | None:
        return None if self.form == "power" else int(self.values.shape[0])

    def sequence(self, n: int) -> np.ndarray:
        """theta_1 .. theta_n as a float array."""
        if self.form == "power":
            i = np.arange(1, n + 1, dtype=float)
            return self.a * i**self.p
        if n > self.values.shape[0]:
            raise KernelRangeError(
                f"theta table holds {self.values.shape[0]} entries, need {n}"
            )
        return self.values[:n].copy()


@dataclass(frozen=True, eq=False)
class KappaModel:
    """Symmetric nonnegative cross term kappa_{i,j}."""

    form: str  # "zero" | "scaled_product" | "table"
    c: float = 0.0
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.form == "zero":
            pass
        elif self.form == "scaled_product":
            if self.c < 0:
                raise ValueError("scaled_product requires c >= 0")
        elif self.form == "table":
            mat = np.asarray(self.matrix, dtype=float)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValueError("kappa table must be a square matrix")
            if (mat < 0).any() or not np.isfinite(mat).all():
                raise ValueError("kappa table must be finite and nonnegative")
            if not np.array_equal(mat, mat.T):
                raise ValueError("kappa table must be symmetric")
            object.__setattr__(self, "matrix", mat)
        else:
            raise ValueError(f"unknown kappa form {self.form!r}")

    @classmethod
    def zero(cls) -> "KappaModel":
        return cls(form="zero")

    @classmethod
    def scaled_product(cls, c: float) -> "KappaModel":
        return cls(form="scaled_product", c=c)

    @classmethod
    def table(cls, matrix) -> "KappaModel":
        return cls(form="table", matrix=np.asarray(matrix, dtype=float))

    @property
    def max_index(self) -> int | None:
        return None if self.form != "table" else int(self.matrix.shape[0])


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Coagulation kernel Lambda = theta x theta + kappa with class metadata.

    ``declared_class`` is a user assertion ("sublinear", "at_least_linear"
    or "unclassified"); the probe in :func:`classify_kernel` can only
    falsify it, never prove it.
    """

    theta: ThetaSequence
    kappa: KappaModel
    declared_class: str = "unclassified"

    def __post_init__(self):
        if self.declared_class not in ("sublinear", "at_least_linear", "unclassified"):
            raise ValueError(f"unknown declared_class {self.declared_class!r}")

    @property
    def separable(self) -> bool:
        """True when Lambda factorises as (1 + c) * theta_i * theta_j."""
        return self.kappa.form in ("zero", "scaled_product")

    @property
    def cross_factor(self) -> float:
        """The factor 1 + c of a separable kernel."""
        if not self.separable:
            raise ValueError("cross_factor is defined for separable kernels only")
        return 1.0 + self.kappa.c

    @property
    def max_index(self) -> int | None:
        limits = [m for m in (self.theta.max_index, self.kappa.max_index) if m is not None]
        return min(limits) if limits else None

    def check_range(self, n: int) -> None:
        m = self.max_index
        if m is not None and n > m:
            raise KernelRangeError(f"kernel tables cover sizes up to {m}, need {n}")


def theta_values(spec: KernelSpec, n: int) -> np.ndarray:
    return spec.theta.sequence(n)


def eval_kernel(spec: KernelSpec, i: int, j: int) -> float:
    """Rate Lambda_{i,j} for a single pair of cluster sizes."""
    if i < 1 or j < 1:
        raise KernelRangeError("cluster sizes are 1-based positive integers")
    k = max(i, j)
    spec.check_range(k)
    th = spec.theta.sequence(k)
    ti, tj = th[i - 1], th[j - 1]
    prod = ti * tj  # product formed once so the pair order cannot matter
    if spec.kappa.form == "zero":
        kap = 0.0
    elif spec.kappa.form == "scaled_product":
        kap = spec.kappa.c * prod
    else:
        kap = float(spec.kappa.matrix[i - 1, j - 1])
    return prod + kap


def kernel_row(spec: KernelSpec, i: int, n: int, theta: np.ndarray | None = None) -> np.ndarray:
    """Row Lambda_{i, 1..n}; ``theta`` may be passed to avoid recomputation."""
    spec.check_range(max(i, n))
    th = theta if theta is not None else spec.theta.sequence(n)
    row = th[i - 1] * th
    if spec.kappa.form == "scaled_product":
        row = row * (1.0 + spec.kappa.c)
    elif spec.kappa.form == "table":
        row = row + spec.kappa.matrix[i - 1, :n]
    return row


@dataclass(frozen=True, eq=False)
class ClassReport:
    """Probed kernel constants.

    B is the probed floor of theta_i / i; A caps kappa against the product
    term; C and zeta are probed lower-bound constants against
    (i*j)**(kappa0/2) and i*j; lambda_min is a probed uniform lower bound
    on the kernel itself.  A constant is None when its probe minimum is
    zero or kept shrinking as the probe grew (names listed in
    ``decayed``); the raw probe minima are kept for diagnostics.
    """

    B: float
    A: float | None
    sublinear_trend: bool
    C: float | None = None
    kappa0: float | None = None
    zeta: float | None = None
    lambda_min: float | None = None
    probe_size: int = 0
    decayed: tuple[str, ...] = ()
    probe_minima: dict = field(default_factory=dict)


def _min_ratio(spec: KernelSpec, n: int, expo: float) -> float:
    """min over (i,j) in [1,n]^2 of Lambda_{i,j} / (i*j)**expo."""
    i = np.arange(1, n + 1, dtype=float)
    w = i**expo
    th = spec.theta.sequence(n)
    if spec.separable:
        r = th / w
        return float((1.0 + spec.kappa.c) * r.min() ** 2)
    lam = np.outer(th, th) + spec.kappa.matrix[:n, :n]
    return float((lam / np.outer(w, w)).min())


def _stable_min(spec: KernelSpec, n_probe: int, expo: float) -> tuple[float, bool]:
    """Probe minimum plus a flag telling whether it was still shrinking."""
    full = _min_ratio(spec, n_probe, expo)
    half = _min_ratio(spec, max(1, n_probe // 2), expo)
    decaying = full < half * (1.0 - DECAY_RTOL)
    return full, decaying


def classify_kernel(spec: KernelSpec, n_probe: int) -> ClassReport:
    """Probe growth class constants over sizes 1..n_probe.

    B is the probed min of theta_i/i.  The sublinear trend test checks
    that the ratio is strictly decreasing over the last half of the probe
    range (a finite stand-in for the ratio vanishing at infinity).  A is
    exact for the zero and scaled-product cross terms and fitted as the
    max of kappa/(theta*theta) for tables.
    """
    if n_probe < 8:
        raise ValueError("n_probe must be at least 8")
    spec.check_range(n_probe)
    i = np.arange(1, n_probe + 1, dtype=float)
    th = spec.theta.sequence(n_probe)
    ratios = th / i
    B = float(ratios.min())
    tail = ratios[n_probe // 2 - 1 :]
    sublinear_trend = bool(np.all(np.diff(tail) < 0))

    if spec.kappa.form == "zero":
        A: float | None = 0.0
    elif spec.kappa.form == "scaled_product":
        A = spec.kappa.c
    else:
        kap = spec.kappa.matrix[:n_probe, :n_probe]
        zero_theta = th == 0.0
        if zero_theta.any() and (kap[zero_theta, :] != 0).any():
            raise ClassificationError(
                "A is undefined: kappa is nonzero at an index where theta vanishes"
            )
        prod = np.outer(th, th)
        mask = prod > 0
        A = float((kap[mask] / prod[mask]).max()) if mask.any() else 0.0

    return ClassReport(
        B=B,
        A=A,
        sublinear_trend=sublinear_trend,
        probe_size=n_probe,
        probe_minima={"B": B},
    )


def lower_bound_constants(
    spec: KernelSpec, n_probe: int, kappa0: float = 1.5
) -> ClassReport:
    """Probe the lower-bound constants used by the gelation checks.

    C bounds Lambda from below against (i*j)**(kappa0/2), zeta against
    i*j, and lambda_min against the constant 1.  Each is the probe
    minimum, reported only when strictly positive and stable under
    enlarging the probe.
    """
    if n_probe < 8:
        raise ValueError("n_probe must be at least 8")
    if not (1.0 < kappa0 <= 2.0):
        raise ValueError("kappa0 must lie in (1, 2]")
    base = classify_kernel(spec, n_probe)

    minima = dict(base.probe_minima)
    decayed: list[str] = []

    def certified(name: str, expo: float) -> float | None:
        val, decaying = _stable_min(spec, n_probe, expo)
        minima[name] = val
        if decaying:
            decayed.append(name)
            return None
        return val if val > 0 else None

    C = certified("C", kappa0 / 2.0)
    zeta = certified("zeta", 1.0)
    lam_min = certified("lambda_min", 0.0)

    return ClassReport(
        B=base.B,
        A=base.A,
        sublinear_trend=base.sublinear_trend,
        C=C,
        kappa0=kappa0 if C is not None else None,
        zeta=zeta,
        lambda_min=lam_min,
        probe_size=n_probe,
        decayed=tuple(decayed),
        probe_minima=minima,
    )
