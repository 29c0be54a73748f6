"""Monotone Markov couplings of Cox and Polya point processes.

Forward condensation dynamics, backward thinning dynamics, exit-space
limits, and a seeded verification harness that checks every implemented
distributional identity by exact enumeration on small discrete spaces
and Monte Carlo on continuous windows.
"""

from .flows import (
    DiscreteModel,
    MonotonicityError,
    NumericError,
    Path,
    backward_resample,
    exit_limit,
    generator_apply,
    monotone_counters,
    reduced_palm_enumerate,
    reset_monotone_counters,
    sample_extremal_flow,
    semigroup_apply,
    simulate_path,
)
from .kernels import (
    CoxPosterior,
    FlowSpec,
    backward_thin,
    forward_increment,
    gamma_param,
    gamma_param_difference,
    rho_config,
    split_posterior,
)
from .measures import (
    CellMeasure,
    PointConfig,
    StepFunction,
    Window,
    cell_counts,
    cell_measure_from_json,
    cell_measure_to_json,
    config_diff,
    config_from_json,
    config_integrate,
    config_leq,
    config_to_json,
    empty_config,
    superpose,
)
from .samplers import (
    RNG_ALGORITHM,
    PolyaParams,
    RngStream,
    sample_gamma_measure,
    sample_log_series,
    sample_negative_binomial,
    sample_poisson_process,
    sample_polya_difference,
    sample_polya_sum,
    thin,
)
from .suites import DEFAULT_SEED, SUITES, exit_limit_sweep, run_suite, run_suites
from .verify import (
    TestReport,
    chi_square_counts,
    duality_check,
    duality_check_exact,
    laplace_mc,
    laplace_poisson_exact,
    laplace_polya_exact,
    mecke_check_gamma,
    mecke_check_polya,
    mecke_check_polya_exact,
)

__version__ = "0.1.0"

from .cli import ConfigError, ExperimentConfig, list_suites  # noqa: E402

__all__ = [
    "CellMeasure",
    "ConfigError",
    "CoxPosterior",
    "DEFAULT_SEED",
    "DiscreteModel",
    "ExperimentConfig",
    "FlowSpec",
    "MonotonicityError",
    "NumericError",
    "Path",
    "PointConfig",
    "PolyaParams",
    "RNG_ALGORITHM",
    "RngStream",
    "SUITES",
    "StepFunction",
    "TestReport",
    "Window",
    "backward_resample",
    "backward_thin",
    "cell_counts",
    "cell_measure_from_json",
    "cell_measure_to_json",
    "chi_square_counts",
    "config_diff",
    "config_from_json",
    "config_integrate",
    "config_leq",
    "config_to_json",
    "duality_check",
    "duality_check_exact",
    "empty_config",
    "exit_limit",
    "exit_limit_sweep",
    "forward_increment",
    "gamma_param",
    "gamma_param_difference",
    "generator_apply",
    "laplace_mc",
    "laplace_poisson_exact",
    "laplace_polya_exact",
    "list_suites",
    "mecke_check_gamma",
    "mecke_check_polya",
    "mecke_check_polya_exact",
    "monotone_counters",
    "reduced_palm_enumerate",
    "reset_monotone_counters",
    "rho_config",
    "run_suite",
    "run_suites",
    "sample_extremal_flow",
    "sample_gamma_measure",
    "sample_log_series",
    "sample_negative_binomial",
    "sample_poisson_process",
    "sample_polya_difference",
    "sample_polya_sum",
    "semigroup_apply",
    "simulate_path",
    "split_posterior",
    "superpose",
    "thin",
]
