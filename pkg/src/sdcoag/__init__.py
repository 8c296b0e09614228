"""Truncated Safronov-Dubovskii coagulation solver with certified bounds."""

__version__ = "0.1.0"

from .convergence import ConvergenceReport, oracle_compare, refine_in_n
from .diagnostics import (
    BOUND_IDS,
    BoundReport,
    TestSequence,
    check_amc,
    check_appendix_m0,
    check_est1,
    check_est2,
    check_est3,
    check_fm,
    check_gel_infmass,
    check_gel_product,
    check_m1_square_integral,
    check_massrbnd,
    check_tailest,
    estimate_gelation_time,
    evaluate_suite,
    moment,
    sum_inverse_powers,
    weak_form_residual,
)
from .errors import (
    ClassificationError,
    ConfigError,
    IntegrationFailure,
    KernelRangeError,
    NumericsError,
    OracleInvalidError,
    ResolutionError,
    SDCoagError,
    UnsupportedKernelError,
)
from .integrate import (
    IntegralAccumulators,
    IntegratorConfig,
    StepStats,
    Trajectory,
    integrate,
    solution_residual,
    uniform_grid,
)
from .kernels import (
    ClassReport,
    KappaModel,
    KernelSpec,
    ThetaSequence,
    classify_kernel,
    eval_kernel,
    kernel_row,
    lower_bound_constants,
    theta_values,
)
from .system import (
    InitialData,
    State,
    make_initial_state,
    rhs_general,
    rhs_separable_fast,
)
from .config import RunConfig, emit_config, load_config, parse_config

__all__ = [
    "__version__",
    "BOUND_IDS",
    "BoundReport",
    "ClassReport",
    "ClassificationError",
    "ConfigError",
    "ConvergenceReport",
    "InitialData",
    "IntegralAccumulators",
    "IntegrationFailure",
    "IntegratorConfig",
    "KappaModel",
    "KernelRangeError",
    "KernelSpec",
    "NumericsError",
    "OracleInvalidError",
    "ResolutionError",
    "RunConfig",
    "SDCoagError",
    "State",
    "StepStats",
    "TestSequence",
    "ThetaSequence",
    "Trajectory",
    "UnsupportedKernelError",
    "check_amc",
    "check_appendix_m0",
    "check_est1",
    "check_est2",
    "check_est3",
    "check_fm",
    "check_gel_infmass",
    "check_gel_product",
    "check_m1_square_integral",
    "check_massrbnd",
    "check_tailest",
    "classify_kernel",
    "emit_config",
    "estimate_gelation_time",
    "eval_kernel",
    "evaluate_suite",
    "integrate",
    "kernel_row",
    "load_config",
    "lower_bound_constants",
    "make_initial_state",
    "moment",
    "oracle_compare",
    "parse_config",
    "refine_in_n",
    "rhs_general",
    "rhs_separable_fast",
    "solution_residual",
    "sum_inverse_powers",
    "theta_values",
    "uniform_grid",
    "weak_form_residual",
]
