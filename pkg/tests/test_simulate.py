"""Benchmark simulators: orbits, determinism, dataset round trips."""

import numpy as np
import pytest

from gpssm.simulate import (Dataset, linear_input, linear_transition,
                            nonlinear_input, nonlinear_transition,
                            simulate_linear, simulate_nonlinear)


def test_linear_noise_free_orbit_follows_recursion():
    data = simulate_linear(horizon=30, seed=4, noise_scale=0.0)
    x, u = data.x_true, data.u
    assert x[0] == 0.0
    for t in range(30):
        assert x[t + 1] == pytest.approx(0.8 * x[t] + 3.0 * u[t], rel=1e-14)
    np.testing.assert_allclose(data.y, 2.0 * x, rtol=1e-14)


def test_linear_impulse_first_step_pinned():
    data = simulate_linear(horizon=5, seed=0, noise_scale=0.0,
                           input_kind="impulse")
    assert data.u[0] == 1.0
    assert np.all(data.u[1:] == 0.0)
    assert data.x_true[1] == pytest.approx(3.0, abs=1e-15)
    assert data.y[1] == pytest.approx(6.0, abs=1e-15)


def test_nonlinear_noise_free_first_step_pinned():
    data = simulate_nonlinear(horizon=3, seed=0, noise_scale=0.0)
    # x1 = 8 cos(1.2) from x0 = 0
    assert data.x_true[1] == pytest.approx(2.89886203581338862111, rel=1e-14)
    assert data.y[1] == pytest.approx(0.05 * data.x_true[1] ** 2, rel=1e-14)


def test_nonlinear_noise_free_orbit_follows_recursion():
    data = simulate_nonlinear(horizon=25, seed=0, noise_scale=0.0)
    x, u = data.x_true, data.u
    for t in range(25):
        assert x[t + 1] == pytest.approx(
            nonlinear_transition(x[t], u[t]), rel=1e-13)


def test_input_waveforms():
    u = linear_input(20)
    assert u[0] == 0.0
    assert u[2] == pytest.approx(np.sin(0.4 * np.pi), rel=1e-15)
    assert u.shape == (21,)
    w = nonlinear_input(4)
    np.testing.assert_allclose(w, np.cos(1.2 * np.arange(1, 6)), rtol=1e-15)


def test_same_seed_reproduces_different_seed_differs():
    a = simulate_linear(horizon=40, seed=11)
    b = simulate_linear(horizon=40, seed=11)
    c = simulate_linear(horizon=40, seed=12)
    np.testing.assert_array_equal(a.y, b.y)
    np.testing.assert_array_equal(a.x_true, b.x_true)
    assert not np.array_equal(a.y, c.y)


def test_noise_scale_scales_disturbances_linearly():
    # for the linear system the state is affine in the noise draws, so
    # scaling the variances by 4 doubles every deviation from the orbit
    orbit = simulate_linear(horizon=30, seed=3, noise_scale=0.0)
    one = simulate_linear(horizon=30, seed=3, noise_scale=1.0)
    four = simulate_linear(horizon=30, seed=3, noise_scale=4.0)
    np.testing.assert_allclose(four.x_true - orbit.x_true,
                               2.0 * (one.x_true - orbit.x_true), rtol=1e-12)


def test_dataset_roundtrip(tmp_path):
    data = simulate_nonlinear(horizon=12, seed=6)
    path = tmp_path / "sim.csv"
    data.save(path)
    back = Dataset.load(path)
    np.testing.assert_allclose(back.y, data.y, rtol=1e-15)
    np.testing.assert_allclose(back.u, data.u, rtol=1e-15)
    np.testing.assert_allclose(back.x_true, data.x_true, rtol=1e-15)


def test_dataset_without_truth_column(tmp_path):
    path = tmp_path / "obs.csv"
    t = np.arange(4)
    np.savetxt(path, np.column_stack([t, np.zeros(4), np.ones(4)]),
               delimiter=",", header="t,u,y", comments="")
    back = Dataset.load(path)
    assert back.x_true is None
    assert back.horizon == 3


def test_dataset_rejects_missing_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        Dataset.load(path)


def test_transition_helpers_are_vectorized():
    x = np.array([-1.0, 0.0, 2.0])
    u = np.array([0.5, 0.5, 0.5])
    np.testing.assert_allclose(linear_transition(x, u), 0.8 * x + 1.5)
    expected = 0.5 * x + 25.0 * x / (1.0 + x * x) + 4.0
    np.testing.assert_allclose(nonlinear_transition(x, u), expected)
