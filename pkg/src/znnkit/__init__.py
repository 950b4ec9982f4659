"""Zeroing-dynamics solvers for time-varying algebra problems.

The package drives a problem-specific error function e(t) to zero with a
prescribed evolution law, continuously (reference integrator) or with
real-time discrete steppers, and layers analysis, localization and a CLI
on top.
"""

__version__ = "0.1.0"

from .activations import (ActivationSpec, Bounded, ComplexActivationMethod,
                          Linear, PowerSigmoid, SignBiPower, activate,
                          activate_complex)
from .analysis import (ConvergenceReport, OrderReport, SweepResult,
                       fit_convergence_rate, make_noise, noise_sweep,
                       order_report)
from .complexsolve import (ComplexTrajectory, embed_complex_matrix,
                           embed_complex_vector, solve_complex_linear)
from .config import ExperimentConfig, config_from_mapping, load_config
from .discretize import (SCHEME_KINDS, Scheme, Trajectory, empirical_order,
                         instrument_problem, integrate_reference,
                         solve_discrete, step, trajectory_to_csv)
from .errors import (ConfigError, DegenerateGeometry, InsufficientObservers,
                     InvalidInput, InvalidSet, InvalidSpec, NeedsWarmup,
                     NothingToFit, PredictMannerViolation, SingularJacobian,
                     StiffnessFailure, ZnnError)
from .evolution import (ActivatedNoiseTolerant, EvolutionSpec, FiniteTime,
                        NoiseTolerant, Original, PowerRamp, ScaleSchedule,
                        VaryingParameter, evolution_rhs, scale_value)
from .evolution import Constant as ConstantSchedule
from .noise import BoundedRandom, NoiseSpec, sample_noise
from .noise import Constant as ConstantNoise
from .noise import Linear as LinearNoise
from .operators import (TimeVaryingOperator, backward_derivative,
                        constant_operator, linearized_operator,
                        operator_derivative)
from .positioning import (DelayTrack, LocalizationResult, Scenario,
                          build_tdoa_system, localization_to_csv, localize,
                          simulate_delays)
from .problems import (KINDS, MATRIX_KINDS, AssembledModel, ProblemInstance,
                       eval_error, eval_jacobian, eval_time_partial,
                       make_synthetic, model_rhs, perturb_model, unvec, vec)
from .projection import (Box, HoleBox, Lattice, ProjectionActivation,
                         ProjectionSet, SphereShell, nonconvex_project)
from .runner import config_digest, run_experiment

__all__ = [
    "__version__",
    # activations
    "ActivationSpec", "Linear", "PowerSigmoid", "SignBiPower", "Bounded",
    "ComplexActivationMethod", "activate", "activate_complex",
    # projection
    "ProjectionSet", "Box", "SphereShell", "HoleBox", "Lattice",
    "ProjectionActivation", "nonconvex_project",
    # evolution
    "EvolutionSpec", "Original", "VaryingParameter", "NoiseTolerant",
    "FiniteTime", "ActivatedNoiseTolerant", "ScaleSchedule",
    "ConstantSchedule", "PowerRamp", "evolution_rhs", "scale_value",
    # operators and problems
    "TimeVaryingOperator", "constant_operator", "operator_derivative",
    "backward_derivative", "linearized_operator", "KINDS", "MATRIX_KINDS",
    "ProblemInstance", "AssembledModel", "eval_error", "eval_jacobian",
    "eval_time_partial", "make_synthetic", "model_rhs", "perturb_model",
    "vec", "unvec",
    # noise
    "NoiseSpec", "ConstantNoise", "LinearNoise", "BoundedRandom",
    "sample_noise",
    # discretize
    "SCHEME_KINDS", "Scheme", "Trajectory", "step", "solve_discrete",
    "integrate_reference", "empirical_order", "instrument_problem",
    "trajectory_to_csv",
    # complex systems
    "ComplexTrajectory", "embed_complex_matrix", "embed_complex_vector",
    "solve_complex_linear",
    # positioning
    "Scenario", "DelayTrack", "LocalizationResult", "build_tdoa_system",
    "simulate_delays", "localize", "localization_to_csv",
    # analysis, config, runner
    "ConvergenceReport", "fit_convergence_rate", "SweepResult",
    "noise_sweep", "make_noise", "OrderReport", "order_report",
    "ExperimentConfig", "load_config", "config_from_mapping",
    "config_digest", "run_experiment",
    # errors
    "ZnnError", "InvalidInput", "InvalidSpec", "InvalidSet",
    "SingularJacobian", "NeedsWarmup", "StiffnessFailure",
    "InsufficientObservers", "DegenerateGeometry", "ConfigError",
    "NothingToFit", "PredictMannerViolation",
]
