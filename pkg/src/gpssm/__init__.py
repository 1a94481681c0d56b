"""Gaussian Process state-space model identification by particle
stochastic approximation EM, with the transition function analytically
marginalized out."""

from .config import ExperimentConfig, load_config
from .errors import ConfigError, NumericalDegeneracyError, ParticleDegeneracyError
from .estimator import GpssmRegressor
from .gp_prior import (GpPredictiveState, JitterPolicy, PredictiveMoments,
                       TrajectoryPrior)
from .kernels import (ConstantMean, LinearKernel, LinearMean, MaternKernel,
                      PinnedKernel, ProductKernel, SquaredExponentialKernel,
                      ZeroMean)
from .observations import LinearGaussianObservation, QuadraticGaussianObservation
from .optimize import OptimizerConfig, OptimizeResult, finite_diff_check, maximize
from .params import GpssmModel
from .pgas import PgasConfig, pgas_sweep, systematic_resample
from .psaem import (ConditionedPredictor, RunArtifacts, identify,
                    predict_onestep, predict_surface, run_psaem,
                    write_predictions)
from .saem import StepSchedule, WeightedTrajectorySet, q_grad, q_value
from .simulate import Dataset, simulate_linear, simulate_nonlinear

__version__ = "0.1.0"

__all__ = [
    "ConditionedPredictor",
    "ConfigError",
    "ConstantMean",
    "Dataset",
    "ExperimentConfig",
    "GpPredictiveState",
    "GpssmModel",
    "GpssmRegressor",
    "JitterPolicy",
    "LinearGaussianObservation",
    "LinearKernel",
    "LinearMean",
    "MaternKernel",
    "NumericalDegeneracyError",
    "OptimizerConfig",
    "OptimizeResult",
    "ParticleDegeneracyError",
    "PgasConfig",
    "PredictiveMoments",
    "PinnedKernel",
    "ProductKernel",
    "QuadraticGaussianObservation",
    "RunArtifacts",
    "SquaredExponentialKernel",
    "StepSchedule",
    "TrajectoryPrior",
    "WeightedTrajectorySet",
    "ZeroMean",
    "finite_diff_check",
    "identify",
    "load_config",
    "maximize",
    "pgas_sweep",
    "predict_onestep",
    "predict_surface",
    "q_grad",
    "q_value",
    "run_psaem",
    "simulate_linear",
    "simulate_nonlinear",
    "systematic_resample",
    "write_predictions",
]
