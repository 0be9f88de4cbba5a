"""SNDR-optimal limiter design for range-constrained memoryless channels.

Given a standardized input density and a noise-to-dynamic-range ratio,
this package solves for the double-sided limiter (affine ramp between two
rails) that maximizes the signal-to-noise-and-distortion ratio, evaluates
arbitrary clipping mappings through the Bussgang decomposition, reports
capacity bounds, and ships brute-force oracles that verify the optimum
without trusting the solver's own equations.
"""

from .capacity import CapacityBounds, capacity_bounds, lower_bound, sndr_cap, upper_bound
from .distributions import (
    ChannelSpec,
    InputDistribution,
    Normalization,
    PartialMoments,
    StandardGaussian,
    TabulatedPdf,
    UniformSymmetric,
    load_tabulated_pdf,
    make_distribution,
    moments,
    normalize_channel,
    partial_moment,
    standard_gaussian,
    uniform_symmetric,
)
from .estimator import OptimalLimiter
from .mappings import (
    BussgangReport,
    DeviceCurve,
    NonlinearMapping,
    PredistortionTable,
    affine_clipped,
    bussgang,
    db_to_linear,
    eval_mapping,
    linear_to_db,
    load_device_curve,
    optimal_limiter,
    predistort_curve,
    reference_limiter,
    sndr_db,
    sndr_physical,
    tabulated_mapping,
)
from .oracles import (
    GridResult,
    MonteCarloResult,
    OracleViolation,
    PerturbationReport,
    ScalingFit,
    bump_report,
    bump_scaling_fit,
    grid_search,
    monte_carlo_sndr,
    perturb_function_space,
    perturb_sets,
    piecewise_constant_best,
    sliver_suite,
    write_reports_csv,
)
from .solvers import (
    BRANCH_NEGATIVE,
    BRANCH_POSITIVE,
    ConvergenceError,
    LimiterParams,
    SolveOutcome,
    gaussian_eta_solve,
    optimal_mapping,
    optimal_sndr,
    solve_general,
    solve_symmetric,
    uniform_eta_closed_form,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # distributions
    "InputDistribution",
    "UniformSymmetric",
    "StandardGaussian",
    "TabulatedPdf",
    "PartialMoments",
    "ChannelSpec",
    "Normalization",
    "normalize_channel",
    "partial_moment",
    "moments",
    "load_tabulated_pdf",
    "make_distribution",
    "uniform_symmetric",
    "standard_gaussian",
    # mappings
    "NonlinearMapping",
    "optimal_limiter",
    "affine_clipped",
    "tabulated_mapping",
    "reference_limiter",
    "eval_mapping",
    "BussgangReport",
    "bussgang",
    "sndr_physical",
    "sndr_db",
    "linear_to_db",
    "db_to_linear",
    "DeviceCurve",
    "load_device_curve",
    "PredistortionTable",
    "predistort_curve",
    # solvers
    "BRANCH_POSITIVE",
    "BRANCH_NEGATIVE",
    "ConvergenceError",
    "LimiterParams",
    "SolveOutcome",
    "solve_general",
    "solve_symmetric",
    "uniform_eta_closed_form",
    "gaussian_eta_solve",
    "optimal_sndr",
    "optimal_mapping",
    # capacity
    "CapacityBounds",
    "lower_bound",
    "upper_bound",
    "sndr_cap",
    "capacity_bounds",
    # oracles
    "OracleViolation",
    "PerturbationReport",
    "write_reports_csv",
    "GridResult",
    "grid_search",
    "perturb_sets",
    "sliver_suite",
    "bump_report",
    "perturb_function_space",
    "ScalingFit",
    "bump_scaling_fit",
    "piecewise_constant_best",
    "MonteCarloResult",
    "monte_carlo_sndr",
    # estimator
    "OptimalLimiter",
]
