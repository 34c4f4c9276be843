"""Worst-case optimization over a finite family of objectives through an approximate Bayesian oracle."""

from .core import (BayesianOracle, CorruptedStateError, EuclideanBall, ExactFiniteOracle, FunctionLosses,
                   FunctionOracle, LossFamily, LossRangeError, MixtureLoss, MwuConfig, OracleFailure,
                   RobustOptError, RobustRunResult, Sense, Simplex, TableLosses, average_solution,
                   bottleneck_of_distribution, eta_default, eta_gamma, exact_finite_oracle, minimax_value,
                   mwu_weights, regret_bound, run_improper_robust, run_infinite_robust, simplex_projection)
from .rng import Stream, derive_seed

__version__ = "0.1.0"
