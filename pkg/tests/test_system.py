import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sdcoag import (
    InitialData,
    KappaModel,
    KernelSpec,
    NumericsError,
    State,
    ThetaSequence,
    UnsupportedKernelError,
    make_initial_state,
    rhs_general,
    rhs_separable_fast,
    theta_values,
)
from conftest import random_states

AGREEMENT_TOL = 1e-12


def spec_power(a, p, c=0.0):
    kappa = KappaModel.scaled_product(c) if c else KappaModel.zero()
    return KernelSpec(ThetaSequence.power(a, p), kappa)


def normalized_gap(f, g):
    return float(np.max(np.abs(f - g) / (1.0 + np.abs(g))))


class TestRateExamples:
    def test_single_component_closed_form(self):
        lam, a = 2.0, 3.0
        spec = spec_power(math.sqrt(lam), 0.0)
        state = State(1, 0.0, np.array([a]))
        assert rhs_general(spec, state)[0] == pytest.approx(-2 * lam * a * a, rel=1e-14)
        assert rhs_separable_fast(spec, state)[0] == pytest.approx(-2 * lam * a * a, rel=1e-14)

    def test_zero_state_gives_zero_rate(self):
        spec = spec_power(1, 1)
        state = State(9, 0.0, np.zeros(9))
        assert np.all(rhs_general(spec, state) == 0.0)
        assert np.all(rhs_separable_fast(spec, state) == 0.0)

    def test_two_components_constant_kernel(self):
        spec = spec_power(1, 0)
        state = State(2, 0.0, np.array([1.0, 1.0]))
        np.testing.assert_allclose(rhs_general(spec, state), [-3.0, -3.0], rtol=1e-14)
        np.testing.assert_allclose(rhs_separable_fast(spec, state), [-3.0, -3.0], rtol=1e-14)

    def test_spec_example_n64(self):
        rng = np.random.default_rng(99)
        spec = spec_power(1, 1, c=0.5)
        state = State(64, 0.0, rng.uniform(0, 1, 64))
        assert normalized_gap(
            rhs_separable_fast(spec, state), rhs_general(spec, state)
        ) <= AGREEMENT_TOL


class TestPathAgreement:
    def test_frozen_batch(self):
        for spec, omega in random_states(seed=12345, cases=256):
            state = State(omega.shape[0], 0.0, omega)
            gap = normalized_gap(rhs_separable_fast(spec, state), rhs_general(spec, state))
            assert gap <= AGREEMENT_TOL

    @given(
        data=st.data(),
        n=st.integers(1, 24),
        p=st.sampled_from([0.0, 0.5, 0.75, 1.0]),
        a=st.floats(0.3, 1.3),
        c=st.sampled_from([0.0, 0.5]),
    )
    @settings(max_examples=80, deadline=None)
    def test_random_small_states(self, data, n, p, a, c):
        omega = data.draw(
            hnp.arrays(np.float64, n, elements=st.floats(0.0, 1.0, allow_nan=False))
        )
        spec = spec_power(a, p, c)
        state = State(n, 0.0, omega)
        gap = normalized_gap(rhs_separable_fast(spec, state), rhs_general(spec, state))
        assert gap <= AGREEMENT_TOL


class TestStructuralProperties:
    @given(n=st.integers(1, 40), seed=st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_power_of_two_homogeneity_is_exact(self, n, seed):
        rng = np.random.default_rng(seed)
        spec = spec_power(1.0, 1.0, 0.5)
        omega = rng.uniform(0, 1, n)
        f1 = rhs_separable_fast(spec, State(n, 0.0, omega))
        f2 = rhs_separable_fast(spec, State(n, 0.0, 2.0 * omega))
        assert np.array_equal(f2, 4.0 * f1)

    @given(s=st.floats(0.0, 7.0), seed=st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_quadratic_homogeneity(self, s, seed):
        rng = np.random.default_rng(seed)
        n = 17
        omega = rng.uniform(0, 1, n)
        for rhs in (rhs_general, rhs_separable_fast):
            f1 = rhs(spec_power(0.8, 0.75), State(n, 0.0, omega))
            f2 = rhs(spec_power(0.8, 0.75), State(n, 0.0, s * omega))
            np.testing.assert_allclose(f2, s * s * f1, rtol=1e-11, atol=1e-13)

    @given(seed=st.integers(0, 10_000), idx=st.integers(0, 15))
    @settings(max_examples=60, deadline=None)
    def test_extinct_component_cannot_decay(self, seed, idx):
        # With omega_i = 0 the loss terms vanish exactly; only production remains.
        rng = np.random.default_rng(seed)
        omega = rng.uniform(0, 1, 16)
        omega[idx] = 0.0
        for rhs in (rhs_general, rhs_separable_fast):
            f = rhs(spec_power(1.0, 1.0, 0.5), State(16, 0.0, omega))
            assert f[idx] >= 0.0

    def test_mass_dissipativity(self):
        # sum_i i * rate_i <= 0 for every nonnegative state
        for spec, omega in random_states(seed=777, cases=64, n_max=128):
            n = omega.shape[0]
            i = np.arange(1, n + 1, dtype=float)
            for rhs in (rhs_general, rhs_separable_fast):
                f = rhs(spec, State(n, 0.0, omega))
                total = math.fsum((i * f).tolist())
                scale = math.fsum(np.abs(i * f).tolist())
                assert total <= 1e-12 * max(scale, 1.0)

    def test_number_dissipativity(self):
        # sum_i rate_i <= -(1/2) (sum_i theta_i omega_i)^2
        for spec, omega in random_states(seed=778, cases=64, n_max=128):
            n = omega.shape[0]
            theta = theta_values(spec, n)
            half_sq = 0.5 * math.fsum((theta * omega).tolist()) ** 2
            for rhs in (rhs_general, rhs_separable_fast):
                f = rhs(spec, State(n, 0.0, omega))
                total = math.fsum(f.tolist())
                scale = math.fsum(np.abs(f).tolist())
                assert total <= -half_sq + 1e-12 * max(scale, 1.0)


class TestErrors:
    def test_fast_path_rejects_table_kappa(self):
        mat = np.zeros((4, 4))
        spec = KernelSpec(ThetaSequence.power(1, 1), KappaModel.table(mat))
        with pytest.raises(UnsupportedKernelError):
            rhs_separable_fast(spec, State(4, 0.0, np.ones(4)))

    def test_non_finite_input_rejected(self):
        spec = spec_power(1, 1)
        state = State(3, 0.0, np.array([1.0, np.inf, 0.0]))
        with pytest.raises(NumericsError):
            rhs_general(spec, state)
        with pytest.raises(NumericsError):
            rhs_separable_fast(spec, state)

    def test_state_validation(self):
        with pytest.raises(ValueError):
            State(3, 0.0, np.array([1.0, -0.5, 0.0]))
        with pytest.raises(ValueError):
            State(3, 0.0, np.ones(2))
        with pytest.raises(ValueError):
            State(2, -1.0, np.ones(2))


class TestSumKernelBoundary:
    def test_sum_kernel_runs_but_gets_no_certificate(self):
        # Lambda = i + j fits neither growth class; it is representable as
        # a pure table cross term (theta = 0), the general evaluator runs
        # it, and classification refuses to fit a cap.
        n = 6
        mat = np.fromfunction(lambda i, j: (i + 1.0) + (j + 1.0), (n, n))
        spec = KernelSpec(
            ThetaSequence.table(np.zeros(8)), KappaModel.table(np.pad(mat, (0, 2)))
        )
        omega = np.full(n, 0.5)
        f = rhs_general(spec, State(n, 0.0, omega))
        assert np.all(np.isfinite(f))
        assert f[0] < 0  # monomers only deplete

        from sdcoag import ClassificationError, classify_kernel

        with pytest.raises(ClassificationError):
            classify_kernel(spec, 8)


class TestInitialData:
    def test_monodisperse(self):
        st_ = make_initial_state(InitialData.monodisperse(1.0), 4)
        np.testing.assert_array_equal(st_.omega, [1.0, 0.0, 0.0, 0.0])
        assert st_.t == 0.0

    def test_power_tail(self):
        st_ = make_initial_state(InitialData.power_tail(1.0, 1.5), 3)
        np.testing.assert_allclose(st_.omega, [1.0, 2 ** -1.5, 3 ** -1.5], rtol=1e-15)

    def test_geometric(self):
        st_ = make_initial_state(InitialData.geometric(1.0, 0.5), 2)
        np.testing.assert_allclose(st_.omega, [0.5, 0.25], rtol=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            InitialData.monodisperse(-1.0)
        with pytest.raises(ValueError):
            InitialData.geometric(1.0, 1.5)
        with pytest.raises(ValueError):
            InitialData.power_tail(1.0, 0.5)
        with pytest.raises(ValueError):
            InitialData.table([-1.0, 2.0])

    def test_table_family(self):
        st_ = make_initial_state(InitialData.table([0.5, 0.25, 0.125]), 2)
        np.testing.assert_array_equal(st_.omega, [0.5, 0.25])
