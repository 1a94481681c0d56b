"""Scikit-learn style wrapper around the identification loop."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .config import ExperimentConfig
from .psaem import ConditionedPredictor, identify
from .simulate import Dataset


class GpssmRegressor(BaseEstimator):
    """Learn a one-dimensional GP state-space model from an output sequence.

    fit(U, y) treats the rows of U as the (scalar) input sequence aligned
    with the observations y; the latent state is never observed.  After
    fitting, predict(X) evaluates the learned transition at state/input
    pairs X = [[x*, u*], ...], conditioning the marginalized GP on the
    final sampled training trajectory.

    Parameters mirror the INI configuration one-to-one (section_key).
    """

    def __init__(self, kernel_family="se", obs_family="linear",
                 obs_gain=2.0, obs_coefficient=0.05, learn_obs_noise=True,
                 matern_order=32, n_particles=15, iterations=300,
                 schedule_exponent=0.7, schedule_burn_in=50,
                 max_opt_iter=25, sigma0=5.0, seed=0):
        self.kernel_family = kernel_family
        self.obs_family = obs_family
        self.obs_gain = obs_gain
        self.obs_coefficient = obs_coefficient
        self.learn_obs_noise = learn_obs_noise
        self.matern_order = matern_order
        self.n_particles = n_particles
        self.iterations = iterations
        self.schedule_exponent = schedule_exponent
        self.schedule_burn_in = schedule_burn_in
        self.max_opt_iter = max_opt_iter
        self.sigma0 = sigma0
        self.seed = seed

    def _config(self):
        return ExperimentConfig({
            "kernel": {"family": self.kernel_family,
                       "order": self.matern_order},
            "obs": {"family": self.obs_family, "gain": self.obs_gain,
                    "coefficient": self.obs_coefficient,
                    "learn_r": self.learn_obs_noise},
            "pgas": {"n_particles": self.n_particles},
            "schedule": {"exponent": self.schedule_exponent,
                         "burn_in": self.schedule_burn_in},
            "optimizer": {"max_iter": self.max_opt_iter},
            "run": {"iterations": self.iterations, "seed": self.seed,
                    "sigma0": self.sigma0},
        })

    def fit(self, U, y):
        U = check_array(U, ensure_2d=False, dtype=float)
        y = check_array(y, ensure_2d=False, dtype=float)
        if U.ndim == 2:
            if U.shape[1] != 1:
                raise ValueError("only scalar input sequences are supported")
            U = U[:, 0]
        if y.ndim != 1:
            raise ValueError("y must be a 1-d observation sequence")
        if U.shape[0] != y.shape[0]:
            raise ValueError("U and y must have the same length")
        if y.shape[0] < 2:
            raise ValueError("need at least 2 time points")

        data = Dataset(y=y, u=U)
        self.artifacts_ = identify(data, self._config())
        self.model_ = self.artifacts_.model
        self.trajectory_ = self.artifacts_.trajectory
        self.trace_ = self.artifacts_.trace
        self._predictor_ = ConditionedPredictor(self.model_, self.trajectory_,
                                                u=U)
        return self

    def predict(self, X, return_std=False, include_process_noise=True):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError("X must have two columns: state and input")
        mean, var = self._predictor_.predict(
            X, include_process_noise=include_process_noise)
        mean = mean[:, 0]
        if return_std:
            return mean, np.sqrt(var[:, 0])
        return mean

    def learned_parameters(self):
        """Final hyperparameters in natural space, keyed by name."""
        check_is_fitted(self, "model_")
        return dict(zip(self.model_.theta_names(),
                        self.model_.trace_values()))
