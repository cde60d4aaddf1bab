"""Monte Carlo verification of hyperbolic identities for Brownian
exponential functionals and local times.

The package simulates the exponential functional A_t = int_0^t exp(2 B_s) ds
along Brownian paths, samples endpoint/local-time pairs exactly, evaluates
the closed-form densities and joint CDFs these laws satisfy, and checks each
identity in law statistically, with reproducible counter-based random
streams throughout.
"""

from ._backend import COMPILED, backend_name
from .closedform import (
    DensityEval,
    MellinCheck,
    density_A,
    density_A_interval,
    joint_cdf_BL,
    joint_cdf_BL_level,
    joint_cdf_shifted,
    joint_pdf_BL,
    mellin_A,
    no_hit_probability,
    normal_cdf,
    normal_quantile,
    theorem_rhs_cdf,
)
from .functionals import (
    FunctionalBatch,
    FunctionalSample,
    exp_functional,
    reversed_pair,
    sample_functionals,
)
from .localtime import (
    HittingTimeSample,
    LevelLocalTimeSample,
    LocalTimeBatch,
    default_occupation_bandwidth,
    levy_max_local_time,
    occupation_local_time,
    sample_bm_with_local_time,
    sample_hitting_time,
    sample_hitting_times,
    sample_levy_pair,
    sample_local_times,
)
from .paths import BrownianPath, GridSpec, sample_brownian_path, sample_brownian_paths, time_reverse_path
from .rng import RngStream, sample_normal
from .sde import (
    ConvergenceResult,
    ExplicitPathResult,
    SdeRunConfig,
    bougerol_drift_check,
    em_strong_error,
    explicit_residual_convergence,
    simulate_X_em,
    simulate_X_explicit,
)
from .stats import (
    SampleSet,
    TestReport,
    ecdf_grid_compare,
    energy_perm_test,
    ks_two_sample,
    verify_bdy,
    verify_boug,
    verify_main,
    verify_reversal,
    verify_second,
)

__version__ = "0.1.0"

__all__ = [
    "BrownianPath",
    "COMPILED",
    "ConvergenceResult",
    "DensityEval",
    "ExplicitPathResult",
    "FunctionalBatch",
    "FunctionalSample",
    "GridSpec",
    "HittingTimeSample",
    "LevelLocalTimeSample",
    "LocalTimeBatch",
    "MellinCheck",
    "RngStream",
    "SampleSet",
    "SdeRunConfig",
    "TestReport",
    "backend_name",
    "bougerol_drift_check",
    "default_occupation_bandwidth",
    "density_A",
    "density_A_interval",
    "ecdf_grid_compare",
    "em_strong_error",
    "energy_perm_test",
    "exp_functional",
    "explicit_residual_convergence",
    "joint_cdf_BL",
    "joint_cdf_BL_level",
    "joint_cdf_shifted",
    "joint_pdf_BL",
    "ks_two_sample",
    "levy_max_local_time",
    "mellin_A",
    "no_hit_probability",
    "normal_cdf",
    "normal_quantile",
    "occupation_local_time",
    "reversed_pair",
    "sample_bm_with_local_time",
    "sample_brownian_path",
    "sample_brownian_paths",
    "sample_functionals",
    "sample_hitting_time",
    "sample_hitting_times",
    "sample_levy_pair",
    "sample_local_times",
    "sample_normal",
    "simulate_X_em",
    "simulate_X_explicit",
    "theorem_rhs_cdf",
    "time_reverse_path",
    "verify_bdy",
    "verify_boug",
    "verify_main",
    "verify_reversal",
    "verify_second",
]
