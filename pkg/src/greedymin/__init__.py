"""Greedy convex minimization over orthonormal dictionaries.

Implements orthogonal-matching-pursuit and weak-Chebyshev greedy solvers
for convex objectives, together with the analysis toolkit that derives
their per-step error recursions and convergence-rate bounds from the
smoothness and uniform-convexity behavior of the objective.
"""

from .analysis import (EquivalenceRow, ModuliEquivalenceReport, ModulusEstimate,
                       RateConstants, RateFit, RecursionReport, SequenceBoundInput,
                       check_error_recursion, check_moduli_equivalence,
                       decrement_gain, distance_bound, error_bound, estimate_moduli,
                       fit_rate, global_convexity_constant, rate_constants,
                       recursive_sequence_bound)
from .config import (AnalysisSettings, ConfigError, ExperimentConfig,
                     config_from_mapping, load_config, parse_config_text)
from .core import (ConvexityParams, IterateTrace, SmoothnessParams, SparseSupport,
                   TraceStep, Vector, as_point, inner, norm)
from .dictionaries import (CanonicalBasis, Dictionary, RotatedBasis, argmax_atom,
                           weak_select)
from .harness import (build_dictionary, build_objective, derive_constants,
                      run_compare, run_demo_cs, run_experiment, run_moduli, sub_seed)
from .objectives import (DiagonalQuadratic, LeastSquares, Objective, PowerSum,
                         bregman_gap, check_gradient, estimate_condition_constants,
                         estimate_gradient_bound, estimate_level_set_diameter,
                         uniform_ball)
from .solvers import (InnerConfig, InnerSolveError, SolverConfig, WeaknessSchedule,
                      restricted_minimize, run_omp, run_wcga)

__version__ = "0.1.0"

__all__ = [
    "AnalysisSettings", "CanonicalBasis", "ConfigError", "ConvexityParams",
    "DiagonalQuadratic", "Dictionary", "EquivalenceRow", "ExperimentConfig",
    "InnerConfig", "InnerSolveError", "IterateTrace", "LeastSquares",
    "ModuliEquivalenceReport", "ModulusEstimate", "Objective", "PowerSum",
    "RateConstants", "RateFit", "RecursionReport", "RotatedBasis",
    "SequenceBoundInput", "SmoothnessParams", "SolverConfig", "SparseSupport",
    "TraceStep", "Vector", "WeaknessSchedule", "argmax_atom", "as_point",
    "bregman_gap", "build_dictionary", "build_objective", "check_error_recursion",
    "check_gradient", "check_moduli_equivalence", "config_from_mapping",
    "decrement_gain", "derive_constants", "distance_bound", "error_bound",
    "estimate_condition_constants", "estimate_gradient_bound",
    "estimate_level_set_diameter", "estimate_moduli", "fit_rate",
    "global_convexity_constant", "inner", "load_config", "norm",
    "parse_config_text", "rate_constants", "recursive_sequence_bound",
    "restricted_minimize", "run_compare", "run_demo_cs", "run_experiment",
    "run_moduli", "run_omp", "run_wcga", "sub_seed", "uniform_ball", "weak_select",
]
