"""Stochastic-approximation surrogate for the EM intermediate quantity.

Each iteration k contributes one sampled trajectory with step size
gamma_k; the surrogate is the resulting convex combination of complete-data
log-likelihoods,

    Qhat_k(theta) = sum_j c_j [ log p(y | x^(j), theta) + log p(x^(j) | theta) ],

kept as an explicit weighted trajectory set.  Old members decay by the
(1 - gamma) products and are dropped once their weight falls below the
pruning threshold, which keeps the set small during burn-in (gamma = 1
collapses it to a single member) and slowly growing afterwards.

``make_objective`` builds a closure over the current set with all
hyperparameter-independent tensors precomputed, so one M-step can evaluate
the surrogate and its gradient many times at BLAS speed.
"""

import numpy as np

from .errors import NumericalDegeneracyError


class StepSchedule:
    """gamma_k = 1 through the burn-in, then (k - burn_in)^(-exponent).

    The exponent must lie in (0.5, 1] so the steps are square-summable but
    not summable, and gamma_1 = 1 always holds.
    """

    def __init__(self, exponent=0.7, burn_in=50):
        if not 0.5 < exponent <= 1.0:
            raise ValueError("step-size exponent must lie in (0.5, 1]")
        if burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        self.exponent = float(exponent)
        self.burn_in = int(burn_in)

    def step_size(self, k):
        if k < 1:
            raise ValueError("iteration index starts at 1")
        if k <= self.burn_in:
            return 1.0
        return float(k - self.burn_in) ** (-self.exponent)


class WeightedTrajectorySet:
    """Explicit weighted mixture of sampled trajectories."""

    def __init__(self, prune_threshold=1e-6):
        self.prune_threshold = float(prune_threshold)
        self.trajectories = []
        self.weights = np.zeros(0)

    def __len__(self):
        return len(self.trajectories)

    def update(self, trajectory, gamma):
        """Decay existing weights by (1 - gamma), add the new member with
        weight gamma, prune, and renormalize."""
        if not 0.0 < gamma <= 1.0:
            raise ValueError("step size must lie in (0, 1]")
        w = np.concatenate([self.weights * (1.0 - gamma), [gamma]])
        self.trajectories.append(np.array(trajectory, dtype=float))
        keep = w >= self.prune_threshold
        self.trajectories = [t for t, k in zip(self.trajectories, keep) if k]
        w = w[keep]
        self.weights = w / w.sum()

    def stacked(self):
        return np.stack(self.trajectories, axis=0)


def make_objective(tset, model, y, u):
    """Closure evaluating the surrogate at any theta vector.

    Returns ``fun(theta_vec, want_grad=True) -> (value, grad)`` with the
    gradient ordered like ``GpssmModel.theta``.  The trajectory stack,
    residuals, and kernel distance tensors are precomputed once.
    """
    if len(tset) == 0:
        raise ValueError("surrogate is undefined for an empty trajectory set")
    x_stack = tset.stacked()
    weights = tset.weights.copy()
    y = np.asarray(y, dtype=float)
    prior_cache = model.trajectory_prior().prepare_dense(x_stack, u)

    n_theta = model.theta().shape[0]

    def fun(theta_vec, want_grad=True):
        # a line search may probe absurd hyperparameters; report those as
        # -inf so the optimizer rejects the trial instead of crashing
        try:
            with np.errstate(all="ignore"):
                m = model.with_theta(theta_vec)
                vals, grads_prior = m.trajectory_prior().eval_dense(
                    prior_cache, want_grad=want_grad)
                ll_obs, grads_obs = m.obs.batch_terms(
                    y, x_stack, want_grad=want_grad)
                value = float(weights @ (vals + ll_obs))
        except (NumericalDegeneracyError, np.linalg.LinAlgError):
            return -np.inf, (np.zeros(n_theta) if want_grad else None)
        if not np.isfinite(value):
            return -np.inf, (np.zeros(n_theta) if want_grad else None)
        if not want_grad:
            return value, None
        grad = np.concatenate([weights @ grads_prior, weights @ grads_obs])
        return value, grad

    return fun


def q_value(tset, model, y, u=None):
    """Surrogate value at the model's current parameters."""
    fun = make_objective(tset, model, y, u)
    return fun(model.theta(), want_grad=False)[0]


def q_grad(tset, model, y, u=None):
    """Surrogate gradient at the model's current parameters, ordered as
    [kernel log-hyperparameters | log q | observation parameters]."""
    fun = make_objective(tset, model, y, u)
    return fun(model.theta(), want_grad=True)[1]
