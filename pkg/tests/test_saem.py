"""Step schedule, weighted trajectory set, and the surrogate objective."""

import numpy as np
import pytest

from gpssm.kernels import SquaredExponentialKernel, ZeroMean
from gpssm.observations import LinearGaussianObservation
from gpssm.params import GpssmModel
from gpssm.saem import StepSchedule, WeightedTrajectorySet, q_grad, q_value


def _model(q=0.5, r=1.0):
    kern = SquaredExponentialKernel([1.0, 0.8], 1.2, dim_labels=["x", "u"])
    return GpssmModel(kernel=kern, mean=ZeroMean(1), log_q=[np.log(q)],
                      obs=LinearGaussianObservation(2.0, r, learn_noise=True),
                      sigma0=3.0)


# -- step schedule ----------------------------------------------------------

def test_burn_in_gives_unit_steps():
    sched = StepSchedule(exponent=0.7, burn_in=50)
    assert all(sched.step_size(k) == 1.0 for k in range(1, 51))


def test_first_post_burn_in_step_is_one():
    # (k - burn_in)^(-p) at k = burn_in + 1 is 1 regardless of p
    sched = StepSchedule(exponent=0.7, burn_in=50)
    assert sched.step_size(51) == 1.0


def test_polynomial_decay():
    sched = StepSchedule(exponent=1.0, burn_in=0)
    assert sched.step_size(2) == pytest.approx(0.5)
    assert sched.step_size(10) == pytest.approx(0.1)
    sched7 = StepSchedule(exponent=0.7, burn_in=0)
    assert sched7.step_size(9) == pytest.approx(9.0 ** -0.7)


def test_exponent_range_enforced():
    with pytest.raises(ValueError):
        StepSchedule(exponent=0.5)
    with pytest.raises(ValueError):
        StepSchedule(exponent=1.2)
    StepSchedule(exponent=0.51)
    StepSchedule(exponent=1.0)


def test_step_index_starts_at_one():
    with pytest.raises(ValueError):
        StepSchedule().step_size(0)


# -- weighted trajectory set ------------------------------------------------

def test_weight_recursion_matches_direct_computation():
    rng = np.random.default_rng(0)
    n_updates = 200
    gammas = [1.0 / k for k in range(1, n_updates + 1)]
    tset = WeightedTrajectorySet(prune_threshold=1e-6)
    for k, gamma in enumerate(gammas):
        tset.update(rng.normal(size=(3, 1)), gamma)

    # direct recursion: weight of entry j is gamma_j * prod_{l>j} (1 - gamma_l)
    direct = np.array([gammas[j] * np.prod([1 - g for g in gammas[j + 1:]])
                       for j in range(n_updates)])
    keep = direct >= 1e-6
    expected = direct[keep] / direct[keep].sum()
    np.testing.assert_allclose(np.sort(tset.weights), np.sort(expected),
                               rtol=1e-12, atol=1e-12)


def test_harmonic_steps_give_uniform_weights():
    # gamma_k = 1/k makes every survivor equally weighted
    tset = WeightedTrajectorySet()
    for k in range(1, 31):
        tset.update(np.full((2, 1), float(k)), 1.0 / k)
    np.testing.assert_allclose(tset.weights, 1.0 / 30, rtol=1e-12)


def test_unit_step_resets_the_set():
    tset = WeightedTrajectorySet()
    tset.update(np.zeros((2, 1)), 1.0)
    tset.update(np.ones((2, 1)), 0.5)
    tset.update(np.full((2, 1), 2.0), 1.0)
    assert len(tset) == 1
    np.testing.assert_array_equal(tset.stacked()[0], np.full((2, 1), 2.0))


def test_pruning_drops_tiny_members_and_renormalizes():
    tset = WeightedTrajectorySet(prune_threshold=0.05)
    tset.update(np.zeros((2, 1)), 1.0)
    for _ in range(60):
        tset.update(np.ones((2, 1)), 0.05)
    assert len(tset) < 61
    assert tset.weights.sum() == pytest.approx(1.0, rel=1e-12)


def test_gamma_bounds_validated():
    tset = WeightedTrajectorySet()
    with pytest.raises(ValueError):
        tset.update(np.zeros((2, 1)), 0.0)
    with pytest.raises(ValueError):
        tset.update(np.zeros((2, 1)), 1.2)


# -- surrogate objective ----------------------------------------------------

def _complete_data_loglik(model, x, y, u):
    prior = model.trajectory_prior()
    total = prior.trajectory_log_prior(x, u)
    total += sum(model.obs.log_lik(y[t], x[t]) for t in range(y.shape[0]))
    return total


def test_singleton_set_equals_complete_data_loglik():
    rng = np.random.default_rng(5)
    model = _model()
    horizon = 7
    y = rng.normal(size=horizon + 1)
    u = rng.normal(size=(horizon + 1, 1))
    x = rng.normal(size=(horizon + 1, 1))
    tset = WeightedTrajectorySet()
    tset.update(x, 1.0)
    assert q_value(tset, model, y, u) == pytest.approx(
        _complete_data_loglik(model, x, y, u), rel=1e-8)


def test_two_equal_trajectories_match_singleton():
    rng = np.random.default_rng(6)
    model = _model()
    y = rng.normal(size=6)
    u = rng.normal(size=(6, 1))
    x = rng.normal(size=(6, 1))
    single = WeightedTrajectorySet()
    single.update(x, 1.0)
    double = WeightedTrajectorySet()
    double.update(x.copy(), 1.0)
    double.update(x.copy(), 0.5)  # weights become (0.5, 0.5)
    assert q_value(double, model, y, u) == pytest.approx(
        q_value(single, model, y, u), rel=1e-12)


def test_q_value_is_linear_in_weights():
    rng = np.random.default_rng(7)
    model = _model()
    y = rng.normal(size=6)
    u = rng.normal(size=(6, 1))
    xa = rng.normal(size=(6, 1))
    xb = rng.normal(size=(6, 1))
    tset = WeightedTrajectorySet()
    tset.update(xa, 1.0)
    tset.update(xb, 0.3)  # weights (0.7, 0.3)
    va = _complete_data_loglik(model, xa, y, u)
    vb = _complete_data_loglik(model, xb, y, u)
    assert q_value(tset, model, y, u) == pytest.approx(
        0.7 * va + 0.3 * vb, rel=1e-12)


def test_q_grad_matches_finite_differences():
    rng = np.random.default_rng(8)
    model = _model()
    y = rng.normal(size=6)
    u = rng.normal(size=(6, 1))
    tset = WeightedTrajectorySet()
    tset.update(rng.normal(size=(6, 1)), 1.0)
    tset.update(rng.normal(size=(6, 1)), 0.4)
    theta = model.theta()
    analytic = q_grad(tset, model, y, u)
    fd = np.empty_like(theta)
    for i in range(theta.size):
        step = 1e-6
        plus, minus = theta.copy(), theta.copy()
        plus[i] += step
        minus[i] -= step
        fd[i] = (q_value(tset, model.with_theta(plus), y, u)
                 - q_value(tset, model.with_theta(minus), y, u)) / (2 * step)
    np.testing.assert_allclose(analytic, fd, rtol=1e-5, atol=1e-8)


def test_gradient_order_matches_theta_vector():
    # kernel block first, then process noise, then observation params
    model = _model()
    names = model.theta_names()
    assert names == ("lambda_x", "lambda_u", "sf2", "q", "r")
