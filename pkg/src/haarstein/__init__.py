"""Haar-random matrices, Stein's method for linear statistics, and TV bounds."""

__version__ = "0.1.0"

from .rng import RngStream
from .haar import group_residual, haar_from_gaussian, sample_gaussian_matrix, sample_haar, sample_haar_frame
from .linear import (
    CoefficientMatrix,
    StatisticSample,
    normalize_coefficients,
    preset,
    project_theta,
    reduce_to_diagonal,
    sample_statistic_batch,
    singular_values,
    trace_statistic,
)
from .stein import TestFunction, abstract_bound, gauss_expectation, stein_transform, verify_stein_bounds
from .pairs import (
    build_rotation,
    check_conditions,
    delta_statistic,
    e_statistic_orth,
    e_statistic_unit,
    estimate_lambda,
    perturb,
    quadratic_condition,
    sample_pairs,
    third_moment_rate,
)
from .moments import CATALOG, evaluate_identity, mc_estimate, quadrature_oracle
from .distance import (
    dkw_radius,
    ks_distance,
    normal_density,
    sphere_marginal_density,
    tv_histogram,
    tv_quadrature,
    wasserstein1,
)
