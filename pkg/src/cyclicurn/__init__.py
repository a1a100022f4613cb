"""Cyclic urn process: simulation, exact moments, and limit verification.

An urn with m ball types where drawing a ball of type j returns it together
with a new ball of type (j+1) mod m.  The package provides the Markov chain
itself, the DFT eigenstructure of its replacement matrix, exact closed-form
first and second moments, per-trajectory martingale residual statistics, the
limit covariance matrices with their rank dichotomy, small-n brute-force
oracles, and a seeded Monte Carlo harness (see the ``cyclicurn`` CLI).
"""

__version__ = "0.1.0"

from .errors import DomainError, ParameterError, ResourceGuardError
from .rng import SplitMix64, mix64, stream_seed
from .spectral import (EigenData, dft_all, dft_coordinate, eigen_data,
                       index_class, large_indices, project_pair, root_powers,
                       shift_action)
from .urn_core import (Composition, Trajectory, UrnParams, conditional_mean,
                       new_urn, replacement_matrix, simulate,
                       simulate_final_many, step)
from .exact_moments import (LogPolarComplex, MomentTable, ResidualL2,
                            gamma_ratio, growth_factor, mean_expansion,
                            mean_u, mean_vector, mixed_moment,
                            mixed_residual_bound_check, residual_l2,
                            second_moment_M, xi_second_moment)
from .residuals import (FluctuationSample, MartingaleTrack, XiEstimate,
                        fluctuation_sample, martingale_values, pi_residual,
                        track_init, track_step, x_statistic, xi_estimate)
from .limits import fixpoint_rhs, g_k, numerical_rank, sigma_k, sigma_total
from .oracle import (BstNode, ExactDist, bst_simulate, bst_tree, dist_moments,
                     dump_json, exact_distribution, recurrence_check,
                     shift_check)

__all__ = [name for name in dir() if not name.startswith("_")]
