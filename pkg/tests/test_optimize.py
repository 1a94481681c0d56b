"""Quasi-Newton maximizer: convergence, line search, safeguards."""

import numpy as np
import pytest

from gpssm.optimize import OptimizerConfig, finite_diff_check, maximize


def _neg_quadratic(center, scale):
    center = np.asarray(center, dtype=float)
    scale = np.asarray(scale, dtype=float)

    def fun(theta, want_grad=True):
        d = theta - center
        val = -0.5 * float(d @ (scale * d))
        return val, (-(scale * d) if want_grad else None)
    return fun


def test_isotropic_quadratic_converges_in_three_iters():
    fun = _neg_quadratic([1.0, -2.0, 0.5], [2.0, 2.0, 2.0])
    res = maximize(fun, np.zeros(3),
                   OptimizerConfig(max_iter=25, grad_tol=1e-10))
    assert res.converged
    assert res.n_iter <= 3
    np.testing.assert_allclose(res.theta, [1.0, -2.0, 0.5], atol=1e-8)


def test_anisotropic_quadratic_converges():
    fun = _neg_quadratic([1.0, -2.0, 0.5], [2.0, 0.5, 4.0])
    res = maximize(fun, np.zeros(3),
                   OptimizerConfig(max_iter=25, grad_tol=1e-8))
    assert res.converged
    assert res.n_iter <= 15
    np.testing.assert_allclose(res.theta, [1.0, -2.0, 0.5], atol=1e-6)


def test_rosenbrock_valley():
    def fun(theta, want_grad=True):
        x, y = theta
        val = -((1 - x) ** 2 + 100 * (y - x * x) ** 2)
        g = np.array([2 * (1 - x) + 400 * x * (y - x * x),
                      -200 * (y - x * x)])
        return val, (g if want_grad else None)

    res = maximize(fun, np.array([-1.2, 1.0]),
                   OptimizerConfig(max_iter=200, grad_tol=1e-8))
    np.testing.assert_allclose(res.theta, [1.0, 1.0], atol=1e-6)


def test_zero_gradient_returns_immediately():
    fun = _neg_quadratic([0.0, 0.0], [1.0, 1.0])
    res = maximize(fun, np.zeros(2), OptimizerConfig(grad_tol=1e-6))
    assert res.converged
    assert res.n_iter == 0
    assert res.n_evals == 1


def test_value_never_decreases():
    fun = _neg_quadratic([3.0], [5.0])
    res = maximize(fun, np.array([-4.0]), OptimizerConfig(max_iter=3))
    assert res.value >= res.start_value


def test_line_searches_record_sufficient_decrease():
    cfg = OptimizerConfig(max_iter=10, sufficient_decrease=1e-4)
    fun = _neg_quadratic([2.0, 1.0], [1.0, 10.0])
    res = maximize(fun, np.zeros(2), cfg)
    assert res.line_searches
    for before, after, alpha, slope in res.line_searches:
        assert slope > 0  # ascent directions only
        assert after >= before + cfg.sufficient_decrease * alpha * slope - 1e-12


def test_no_progress_flag_returns_start():
    # a function whose gradient lies about the landscape: claims ascent
    # along +e0 but the value only ever drops
    def fun(theta, want_grad=True):
        val = -abs(float(theta[0])) - (1.0 if theta[0] != 0.0 else 0.0)
        return val, (np.array([1.0]) if want_grad else None)

    start = np.zeros(1)
    res = maximize(fun, start, OptimizerConfig(max_iter=5))
    assert res.no_progress
    np.testing.assert_array_equal(res.theta, start)
    assert res.value == res.start_value


def test_nonfinite_start_raises():
    def fun(theta, want_grad=True):
        return np.nan, np.zeros(1)
    with pytest.raises(ValueError):
        maximize(fun, np.zeros(1))


def test_warm_start_hessian_accepted():
    fun = _neg_quadratic([1.0, 1.0], [2.0, 3.0])
    first = maximize(fun, np.zeros(2), OptimizerConfig(grad_tol=1e-10))
    res = maximize(fun, np.array([0.9, 0.9]),
                   OptimizerConfig(grad_tol=1e-10),
                   hess_inv0=first.hess_inv)
    assert res.converged
    np.testing.assert_allclose(res.theta, [1.0, 1.0], atol=1e-8)


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(sufficient_decrease=0.0)
    with pytest.raises(ValueError):
        OptimizerConfig(sufficient_decrease=0.5, curvature=0.3)
    with pytest.raises(ValueError):
        OptimizerConfig(curvature=1.5)


def test_finite_diff_check_flags_wrong_gradient():
    good = _neg_quadratic([0.5], [2.0])

    def bad(theta, want_grad=True):
        val, g = good(theta)
        return val, (g * 1.01 if want_grad else None)

    assert finite_diff_check(good, np.array([2.0])) < 1e-6
    assert finite_diff_check(bad, np.array([2.0])) > 1e-3


def test_finite_diff_check_step_order():
    # halving the step should shrink the FD error roughly quadratically,
    # confirming the central scheme
    def fun(theta, want_grad=True):
        return float(np.sin(theta[0])), (np.cos(theta) if want_grad else None)

    e1 = finite_diff_check(fun, np.array([0.7]), step=1e-3)
    e2 = finite_diff_check(fun, np.array([0.7]), step=5e-4)
    assert e2 < e1
    assert e2 == pytest.approx(e1 / 4, rel=0.2)
