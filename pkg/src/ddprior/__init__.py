"""Dirichlet-Gamma priors that share strength across the rows of a CP-table.

The main entry points are :func:`estimate_node` (optimal linear estimates of
one table), :class:`MddPrior` and :class:`DdPrior` (prior specifications),
:func:`rho` (row correlations) and :func:`fit_pi` / :func:`mse_ratio` for
choosing the mixing proportions.
"""

from .correlation import (CorrelationMode, rho, rho_approx_error_bound, rho_half, zeta_approx,
                          zeta_exact)
from .estimator import (EstimateTable, build_b_general, build_b_mdd, estimate_node,
                        mp_independent, pooled_estimates, prop3_diagnostic, solve_weights,
                        weight_matrix)
from .exceptions import (DataError, DDPriorError, NetworkError, PreconditionError,
                         PriorSpecError, QuadratureError, SolverError)
from .fileio import (ParseError, PriorConfig, build_prior, load_data, load_network,
                     load_prior_config)
from .network import BeliefNet, Dataset, NodeSpec, count_tuples, proportions
from .prior import (CovarianceModel, DdPrior, MddPrior, gamma_matrix, mc_covariance_model,
                    mdd_covariance_model, mdd_to_dd, sample_prior)
from .selection import PiVector, Scenario, fit_pi, mse_ratio, mse_ratio_grid, pool_across_tables

__version__ = "0.1.0"

__all__ = [
    "BeliefNet", "CorrelationMode", "CovarianceModel", "DDPriorError", "DataError",
    "Dataset", "DdPrior", "EstimateTable", "MddPrior", "NetworkError", "NodeSpec",
    "ParseError", "PiVector", "PreconditionError", "PriorConfig", "PriorSpecError",
    "QuadratureError", "Scenario", "SolverError", "build_b_general", "build_b_mdd",
    "build_prior", "count_tuples", "estimate_node", "fit_pi", "gamma_matrix", "load_data",
    "load_network", "load_prior_config", "mc_covariance_model", "mdd_covariance_model",
    "mdd_to_dd", "mp_independent", "mse_ratio", "mse_ratio_grid", "pool_across_tables",
    "pooled_estimates", "prop3_diagnostic", "proportions", "rho", "rho_approx_error_bound",
    "rho_half", "sample_prior", "solve_weights", "weight_matrix", "zeta_approx", "zeta_exact",
]
