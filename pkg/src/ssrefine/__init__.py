"""Estimation and refinement of linear state-space models.

Subspace-style initial estimates from time- or frequency-domain data,
closed-form (B, D) and (C, D) regressions, block coordinate descent and
Gauss-Newton refinement, structural optimality checks, and a seeded
Monte Carlo bench harness.
"""

from .models import (
    FrequencyData,
    MarkovSequence,
    StateSpaceModel,
    TimeSeriesData,
    controllable,
    error_norm,
    frequency_cost,
    frequency_response,
    io_equivalent,
    is_stable,
    markov_parameters,
    observable,
    prediction_cost,
    random_stable_continuous,
    random_stable_discrete,
    similarity_transform,
    simulate,
)
from .regress import (
    RegressionResult,
    estimate_bd_freq,
    estimate_bd_time,
    estimate_cd_freq,
    estimate_cd_time,
    normal_equation_residual,
)
from .refine import (
    RefineOptions,
    RefinementReport,
    bcd_iterate,
    compare_optimizers,
    gauss_newton_bcd,
    gauss_newton_full,
    trajectory_table,
)
from .theory import (
    CommutantCoefficients,
    EigenRegressionProblem,
    commutant_coefficients,
    commuting_transform,
    eigen_regression,
    equivalent_realization,
    equivalent_realization_dual,
    extract_input_matrix,
)
from .subspace import SubspaceOptions, subspace_freq, subspace_time
from .bench import (
    BenchConfig,
    TrialRecord,
    run_bench,
    run_freq_domain_bench,
    run_time_domain_bench,
    summarize,
)

__version__ = "0.1.0"
