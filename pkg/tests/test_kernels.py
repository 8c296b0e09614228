import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdcoag import (
    ClassificationError,
    KappaModel,
    KernelRangeError,
    KernelSpec,
    ThetaSequence,
    classify_kernel,
    eval_kernel,
    kernel_row,
    lower_bound_constants,
    theta_values,
)


def spec_power(a, p, c=None):
    kappa = KappaModel.zero() if c is None else KappaModel.scaled_product(c)
    return KernelSpec(ThetaSequence.power(a, p), kappa)


class TestEvalKernel:
    def test_linear_theta_product(self):
        assert eval_kernel(spec_power(1, 1), 2, 3) == 6.0

    def test_power_three_quarters(self):
        assert eval_kernel(spec_power(1, 0.75), 4, 4) == pytest.approx(8.0, rel=1e-14)

    def test_scaled_product_cross_term(self):
        assert eval_kernel(spec_power(1, 1, c=0.5), 2, 3) == pytest.approx(9.0)

    def test_table_range_error(self):
        spec = KernelSpec(ThetaSequence.table([1.0, 2.0]), KappaModel.zero())
        with pytest.raises(KernelRangeError):
            eval_kernel(spec, 1, 3)

    def test_kappa_table(self):
        mat = np.array([[0.0, 1.0], [1.0, 0.0]])
        spec = KernelSpec(ThetaSequence.power(1, 1), KappaModel.table(mat))
        assert eval_kernel(spec, 1, 2) == 3.0  # 1*2 + 1

    def test_row_matches_scalar(self):
        spec = spec_power(1.2, 0.5, c=0.3)
        row = kernel_row(spec, 3, 6)
        for j in range(1, 7):
            assert row[j - 1] == pytest.approx(eval_kernel(spec, 3, j), rel=1e-15)


class TestValidation:
    def test_power_needs_positive_amplitude(self):
        with pytest.raises(ValueError):
            ThetaSequence.power(0.0, 1.0)

    def test_power_needs_nonneg_exponent(self):
        with pytest.raises(ValueError):
            ThetaSequence.power(1.0, -0.5)

    def test_kappa_table_must_be_symmetric(self):
        with pytest.raises(ValueError):
            KappaModel.table(np.array([[0.0, 1.0], [2.0, 0.0]]))

    def test_kappa_table_must_be_nonnegative(self):
        with pytest.raises(ValueError):
            KappaModel.table(np.array([[0.0, -1.0], [-1.0, 0.0]]))

    def test_declared_class_checked(self):
        with pytest.raises(ValueError):
            KernelSpec(ThetaSequence.power(1, 1), KappaModel.zero(), declared_class="huge")


class TestClassify:
    def test_linear_theta(self):
        rep = classify_kernel(spec_power(1, 1), 64)
        assert rep.B == 1.0
        assert rep.A == 0.0
        assert not rep.sublinear_trend

    def test_square_root_theta(self):
        rep = classify_kernel(spec_power(1, 0.5), 64)
        assert rep.sublinear_trend
        assert rep.B == pytest.approx(64 ** -0.5)

    def test_scaled_product_recovers_cap_exactly(self):
        rep = classify_kernel(spec_power(1, 1, c=0.5), 64)
        assert rep.A == 0.5

    def test_table_kappa_fit(self):
        th = ThetaSequence.table(np.arange(1.0, 9.0))
        mat = 0.25 * np.outer(np.arange(1.0, 9.0), np.arange(1.0, 9.0))
        rep = classify_kernel(KernelSpec(th, KappaModel.table(mat)), 8)
        assert rep.A == pytest.approx(0.25, rel=1e-12)

    def test_zero_theta_with_kappa_is_undefined(self):
        th = ThetaSequence.table([1.0, 0.0] + [1.0] * 6)
        mat = np.ones((8, 8))
        with pytest.raises(ClassificationError):
            classify_kernel(KernelSpec(th, KappaModel.table(mat)), 8)

    def test_probe_too_small(self):
        with pytest.raises(ValueError):
            classify_kernel(spec_power(1, 1), 7)


class TestLowerBounds:
    def test_power_three_quarters_certifies_c(self):
        rep = lower_bound_constants(spec_power(1, 0.75), 64, kappa0=1.5)
        assert rep.C == pytest.approx(1.0)
        assert rep.kappa0 == 1.5
        assert rep.zeta is None
        assert "zeta" in rep.decayed
        assert rep.probe_minima["zeta"] > 0  # the raw probe minimum is kept

    def test_product_kernel_certifies_zeta(self):
        rep = lower_bound_constants(spec_power(1, 1), 64)
        assert rep.zeta == pytest.approx(1.0)
        assert rep.lambda_min == pytest.approx(1.0)

    def test_cross_term_scales_floors(self):
        rep = lower_bound_constants(spec_power(1, 1, c=0.5), 64)
        assert rep.zeta == pytest.approx(1.5)

    def test_kappa0_domain(self):
        with pytest.raises(ValueError):
            lower_bound_constants(spec_power(1, 1), 64, kappa0=2.5)

    def test_certified_floor_holds_pointwise(self):
        rep = lower_bound_constants(spec_power(1, 0.75), 32, kappa0=1.5)
        for i in (1, 3, 17, 32):
            for j in (2, 5, 32):
                lam = eval_kernel(spec_power(1, 0.75), i, j)
                assert lam >= rep.C * (i * j) ** 0.75 * (1 - 1e-12)


@given(
    a=st.floats(0.1, 3.0),
    p=st.floats(0.0, 1.5),
    c=st.floats(0.0, 2.0),
    i=st.integers(1, 500),
    j=st.integers(1, 500),
)
@settings(max_examples=150, deadline=None)
def test_symmetry_and_nonnegativity(a, p, c, i, j):
    spec = spec_power(a, p, c=c)
    lam = eval_kernel(spec, i, j)
    assert lam == eval_kernel(spec, j, i)
    assert lam >= 0.0


@given(a=st.floats(0.2, 2.0), p=st.floats(1.0, 1.5), c=st.floats(0.0, 1.0))
@settings(max_examples=60, deadline=None)
def test_superlinear_class_consistency(a, p, c):
    spec = spec_power(a, p, c=c)
    rep = classify_kernel(spec, 32)
    assert rep.B > 0
    theta = theta_values(spec, 32)
    # cross term capped by A * theta_i * theta_j at every probed pair
    for i in (1, 7, 32):
        for j in (2, 32):
            kap = c * theta[i - 1] * theta[j - 1]
            assert kap <= rep.A * theta[i - 1] * theta[j - 1] * (1 + 1e-12)


@given(a=st.floats(0.2, 2.0), p=st.floats(0.0, 0.95))
@settings(max_examples=60, deadline=None)
def test_sublinear_ratio_decreases(a, p):
    spec = spec_power(a, p)
    theta = theta_values(spec, 64)
    ratios = theta / np.arange(1, 65)
    assert np.all(np.diff(ratios) < 0)
    assert classify_kernel(spec, 64).sublinear_trend
