import time

import numpy as np
import pytest

from sdcoag import (
    InitialData,
    IntegratorConfig,
    KappaModel,
    KernelSpec,
    ThetaSequence,
    integrate,
    make_initial_state,
    uniform_grid,
)

REFERENCE_CUTOFFS = (1, 2, 4, 8)


def product_kernel(c: float = 0.0) -> KernelSpec:
    kappa = KappaModel.scaled_product(c) if c else KappaModel.zero()
    return KernelSpec(ThetaSequence.power(1.0, 1.0), kappa)


def constant_kernel() -> KernelSpec:
    return KernelSpec(ThetaSequence.power(1.0, 0.0), KappaModel.zero())


def _timed_reference(method_cfg):
    spec = product_kernel()
    init = make_initial_state(InitialData.monodisperse(1.0), 16)
    grid = uniform_grid(2.0, 2001)
    t0 = time.perf_counter()
    traj = integrate(spec, init, 2.0, grid, method_cfg, REFERENCE_CUTOFFS)
    return traj, time.perf_counter() - t0


@pytest.fixture(scope="session")
def ref_run_timed():
    """(trajectory, seconds) of the adaptive n=16 product-kernel reference."""
    return _timed_reference(IntegratorConfig())


@pytest.fixture(scope="session")
def ref_run(ref_run_timed):
    return ref_run_timed[0]


@pytest.fixture(scope="session")
def ref_run_oracle_timed():
    """Fixed-step counterpart of ref_run at h=1e-5 (the brute-force oracle)."""
    return _timed_reference(IntegratorConfig(method="fixed_rk4", h=1e-5))


@pytest.fixture(scope="session")
def ref_run_oracle(ref_run_oracle_timed):
    return ref_run_oracle_timed[0]


@pytest.fixture(scope="session")
def zero_run():
    spec = product_kernel()
    init = make_initial_state(InitialData.monodisperse(0.0), 8)
    grid = uniform_grid(5.0, 51)
    return integrate(spec, init, 5.0, grid, IntegratorConfig(), (1, 2))


def random_states(seed: int, cases: int, n_max: int = 256):
    """Deterministic batch of (spec, omega) pairs in the generic regime."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(cases):
        n = int(rng.integers(2, n_max + 1))
        p = float(rng.choice([0.0, 0.5, 0.75, 1.0]))
        a = float(rng.uniform(0.3, 1.3))
        c = float(rng.choice([0.0, 0.5]))
        kappa = KappaModel.scaled_product(c) if c else KappaModel.zero()
        spec = KernelSpec(ThetaSequence.power(a, p), kappa)
        out.append((spec, rng.uniform(0.0, 1.0, n)))
    return out
