"""sfheat: numerical laboratory for the stochastic fractional heat equation
driven by multiplicative Gaussian noise whose covariance is the heat kernel.

Computes Stratonovich and Skorohod solutions and moments via Feynman-Kac
Monte Carlo, cross-validated against a Wiener-chaos series oracle and a
mollified-noise direct solver.
"""

__version__ = "0.1.0"

from .chaos import (ChaosTerm, ExistenceReport, chaos_second_moment, chaos_term,
                    existence_check, series_term_bound)
from .errors import BudgetError, FactorizationError, RegimeError
from .exponents import (DivergentExponentWarning, ExponentValue, MollifierParams,
                        cross_exponent, deterministic_bound, mollified_inner,
                        self_exponent)
from .field import (CovarianceMatrix, WickSampler, WickWeights, build_covariance,
                    conditional_I_sample, sample_field, sample_wick_weights)
from .fk import (MomentEstimate, SolutionSample, sko_mean_exact, sko_moment,
                 sko_solution_sample, strat_moment, strat_solution_sample)
from .kernels import (GridFunction, h_inner_product, heat_kernel, heat_kernel_ft,
                      stable_kernel, stable_kernel_ft)
from .params import InitialCondition, ModelParams, parse_u0
from .paths import (Path, RngStream, TimeGrid, constant_path, path_to_csv,
                    sample_increment, sample_path, sample_subordinator_increment)
from .solver import (FieldState, NoiseSlabSampler, TorusGrid, ensemble_moment,
                     sample_noise_slab, step)

__all__ = [
    "BudgetError", "ChaosTerm", "CovarianceMatrix", "DivergentExponentWarning",
    "ExistenceReport", "ExponentValue", "FactorizationError", "FieldState",
    "GridFunction", "InitialCondition", "ModelParams", "MollifierParams",
    "MomentEstimate", "NoiseSlabSampler", "Path", "RegimeError", "RngStream",
    "SolutionSample", "TimeGrid", "TorusGrid", "WickSampler", "WickWeights",
    "build_covariance", "chaos_second_moment", "chaos_term", "conditional_I_sample",
    "constant_path", "cross_exponent", "deterministic_bound", "ensemble_moment",
    "existence_check", "h_inner_product", "heat_kernel", "heat_kernel_ft",
    "mollified_inner", "parse_u0", "path_to_csv", "sample_field",
    "sample_increment", "sample_noise_slab", "sample_path",
    "sample_subordinator_increment", "sample_wick_weights", "self_exponent",
    "series_term_bound", "sko_mean_exact", "sko_moment", "sko_solution_sample",
    "stable_kernel", "stable_kernel_ft", "step", "strat_moment",
    "strat_solution_sample",
]
