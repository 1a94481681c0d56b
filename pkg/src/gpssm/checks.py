"""Self-contained gradient and consistency checks for the `check` command.

Each check compares an analytic quantity against an independent evaluation
(finite differences, a dense joint Gaussian, or a from-scratch rebuild) on
randomized small problems.  Returns a list of (name, passed, detail)
records; the CLI turns any failure into a nonzero exit.
"""

import numpy as np

from .gp_prior import TrajectoryPrior
from .kernels import (LinearKernel, MaternKernel, ProductKernel,
                      SquaredExponentialKernel, ZeroMean)
from .observations import LinearGaussianObservation, QuadraticGaussianObservation
from .optimize import finite_diff_check
from .params import GpssmModel
from .pgas import systematic_resample
from .saem import WeightedTrajectorySet, make_objective


def _random_kernel(rng, d):
    pick = rng.integers(0, 4)
    if pick == 0:
        return LinearKernel(rng.uniform(0.3, 2.0, size=d))
    if pick == 1:
        return SquaredExponentialKernel(rng.uniform(0.5, 2.0, size=d),
                                        rng.uniform(0.5, 2.0))
    if pick == 2:
        return MaternKernel(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0),
                            order=int(rng.choice([3, 5])))
    if d < 2:
        return SquaredExponentialKernel(rng.uniform(0.5, 2.0, size=d))
    return ProductKernel(
        [(MaternKernel(rng.uniform(0.5, 2.0)), 1),
         (SquaredExponentialKernel(rng.uniform(0.5, 2.0, size=d - 1)), d - 1)])


def _kernel_grad_check(rng, trials=20):
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(1, 3))
        kern = _random_kernel(rng, d)
        a = rng.normal(size=(1, 3, d))
        b = rng.normal(size=(1, 4, d))

        def fun(vec, want_grad=True, kern=kern, a=a, b=b):
            k2 = kern.with_log_params(vec)
            val = float(np.sum(k2(a, b)))
            if not want_grad:
                return val, None
            return val, np.array([float(np.sum(g)) for g in k2.grad_seq(a, b)])

        worst = max(worst, finite_diff_check(fun, kern.log_params))
    return worst


def _prior_consistency_check(rng, trials=5):
    worst = 0.0
    for _ in range(trials):
        d_u = int(rng.integers(0, 2))
        kern = _random_kernel(rng, 1 + d_u)
        prior = TrajectoryPrior(kern, ZeroMean(1), [np.log(rng.uniform(0.3, 1.5))],
                                sigma0=2.0)
        horizon = int(rng.integers(3, 9))
        x = rng.normal(size=(horizon + 1, 1))
        u = rng.normal(size=(horizon + 1, d_u)) if d_u else None
        seq = prior.trajectory_log_prior(x, u)
        dense = prior.dense_log_prior(x, u)
        worst = max(worst, abs(seq - dense) / max(abs(dense), 1.0))
    return worst


def _prior_grad_check(rng, trials=5):
    worst = 0.0
    for _ in range(trials):
        kern = SquaredExponentialKernel(rng.uniform(0.5, 2.0, size=2),
                                        rng.uniform(0.5, 2.0))
        log_q = np.array([np.log(rng.uniform(0.3, 1.5))])
        horizon = int(rng.integers(3, 9))
        x = rng.normal(size=(horizon + 1, 1))
        u = rng.normal(size=(horizon + 1, 1))

        def fun(vec, want_grad=True, x=x, u=u):
            pr = TrajectoryPrior(kern.with_log_params(vec[:-1]), ZeroMean(1),
                                 vec[-1:], sigma0=2.0)
            if not want_grad:
                return pr.trajectory_log_prior(x, u), None
            return pr.dense_log_prior(x, u), pr.trajectory_log_prior_grad(x, u)

        worst = max(worst, finite_diff_check(
            fun, np.concatenate([kern.log_params, log_q])))
    return worst


def _obs_grad_check(rng, trials=10):
    worst = 0.0
    for _ in range(trials):
        if rng.uniform() < 0.5:
            obs = LinearGaussianObservation(rng.normal(), rng.uniform(0.5, 2.0),
                                            learn_gain=True)
        else:
            obs = QuadraticGaussianObservation(rng.normal(), rng.uniform(0.5, 2.0),
                                               learn_coeff=True)
        x = rng.normal(size=1)
        y = float(rng.normal())

        def fun(vec, want_grad=True, obs=obs, x=x, y=y):
            o2 = obs.with_params(vec)
            val = float(o2.log_lik(y, x))
            return val, (o2.log_lik_grad(y, x) if want_grad else None)

        worst = max(worst, finite_diff_check(fun, obs.params))
    return worst


def _surrogate_grad_check(rng):
    kern = SquaredExponentialKernel([1.0, 0.8], 1.2, dim_labels=["x", "u"])
    obs = LinearGaussianObservation(2.0, 1.0, learn_noise=True)
    model = GpssmModel(kernel=kern, mean=ZeroMean(1), log_q=[0.0], obs=obs)
    horizon = 8
    u = rng.normal(size=horizon + 1)
    y = rng.normal(size=horizon + 1)
    tset = WeightedTrajectorySet()
    for gamma in (1.0, 0.7, 0.4):
        tset.update(rng.normal(size=(horizon + 1, 1)), gamma)
    fun = make_objective(tset, model, y, u)
    return finite_diff_check(fun, model.theta())


def _resample_check(rng):
    idx = systematic_resample(np.full(4, 0.25), rng)
    return 0.0 if sorted(idx.tolist()) == [0, 1, 2, 3] else 1.0


def run_property_suite(seed=1234):
    rng = np.random.default_rng(seed)
    checks = [
        ("kernel gradients vs finite differences", _kernel_grad_check, 1e-5),
        ("trajectory prior: sequential vs dense", _prior_consistency_check, 1e-8),
        ("trajectory prior gradients vs finite differences", _prior_grad_check, 1e-5),
        ("observation gradients vs finite differences", _obs_grad_check, 1e-5),
        ("surrogate gradient vs finite differences", _surrogate_grad_check, 1e-5),
        ("systematic resampling, uniform weights", _resample_check, 0.5),
    ]
    results = []
    for name, fn, tol in checks:
        err = fn(rng)
        results.append((name, err < tol, f"max err {err:.3g} (tol {tol:g})"))
    return results
