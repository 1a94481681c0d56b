"""Benchmark system simulators and dataset handling.

Two scalar benchmark systems:

* a stable linear system with a sinusoidal input,
      x_{t+1} = 0.8 x_t + 3 u_t + v_t,   y_t = 2 x_t + e_t,
  with v, e ~ N(0, 1.5) at unit noise scale and u_t = sin(2 pi t / 10);

* a strongly nonlinear system with a quadratic readout,
      x_{t+1} = 0.5 x_t + 25 x_t / (1 + x_t^2) + 8 u_t + v_t,
      y_t = 0.05 x_t^2 + e_t,
  with v ~ N(0, 10), e ~ N(0, 1) at unit noise scale and
  u_t = cos(1.2 (t + 1)).

``noise_scale`` multiplies the noise *variances*, so 0 gives the
deterministic orbit.  Datasets are CSV files with header ``t,u,y`` and an
optional ``x_true`` column.
"""

from dataclasses import dataclass

import numpy as np


def linear_transition(x, u):
    """Noise-free transition mean of the linear benchmark."""
    return 0.8 * np.asarray(x, dtype=float) + 3.0 * np.asarray(u, dtype=float)


def nonlinear_transition(x, u):
    """Noise-free transition mean of the nonlinear benchmark."""
    x = np.asarray(x, dtype=float)
    return 0.5 * x + 25.0 * x / (1.0 + x * x) + 8.0 * np.asarray(u, dtype=float)


def linear_input(horizon, kind="sine"):
    t = np.arange(horizon + 1)
    if kind == "sine":
        return np.sin(2.0 * np.pi * t / 10.0)
    if kind == "impulse":
        u = np.zeros(horizon + 1)
        u[0] = 1.0
        return u
    raise ValueError(f"unknown input kind: {kind!r}")


def nonlinear_input(horizon):
    return np.cos(1.2 * (np.arange(horizon + 1) + 1.0))


@dataclass
class Dataset:
    """Aligned input/observation record; ``x_true`` is kept when the data
    came from a simulator so tests can score against the latent truth."""

    y: np.ndarray
    u: np.ndarray = None
    x_true: np.ndarray = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if self.u is not None:
            self.u = np.asarray(self.u, dtype=float)
        if self.x_true is not None:
            self.x_true = np.asarray(self.x_true, dtype=float)

    @property
    def horizon(self):
        return self.y.shape[0] - 1

    def save(self, path):
        t = np.arange(self.y.shape[0])
        u = self.u if self.u is not None else np.zeros_like(self.y)
        cols = [t, u, self.y]
        header = "t,u,y"
        if self.x_true is not None:
            cols.append(self.x_true)
            header += ",x_true"
        np.savetxt(path, np.column_stack(cols), delimiter=",", header=header,
                   comments="", fmt="%.17g")

    @staticmethod
    def load(path):
        raw = np.genfromtxt(path, delimiter=",", names=True)
        if raw.dtype.names is None or not {"t", "u", "y"} <= set(raw.dtype.names):
            raise ValueError(f"{path}: expected columns t,u,y[,x_true]")
        x_true = raw["x_true"] if "x_true" in raw.dtype.names else None
        return Dataset(y=np.atleast_1d(raw["y"]), u=np.atleast_1d(raw["u"]),
                       x_true=None if x_true is None else np.atleast_1d(x_true))


def _simulate(transition, u, obs_gain, obs_kind, q_var, r_var, seed):
    horizon = u.shape[0] - 1
    rng = np.random.default_rng(seed)
    v = np.sqrt(q_var) * rng.standard_normal(horizon)
    e = np.sqrt(r_var) * rng.standard_normal(horizon + 1)
    x = np.zeros(horizon + 1)
    for t in range(horizon):
        x[t + 1] = transition(x[t], u[t]) + v[t]
    if obs_kind == "linear":
        y = obs_gain * x + e
    else:
        y = obs_gain * x * x + e
    return Dataset(y=y, u=u, x_true=x)


def simulate_linear(horizon=120, seed=0, noise_scale=1.0, input_kind="sine"):
    """Simulate the linear benchmark from x_0 = 0."""
    u = linear_input(horizon, input_kind)
    return _simulate(linear_transition, u, 2.0, "linear",
                     1.5 * noise_scale, 1.5 * noise_scale, seed)


def simulate_nonlinear(horizon=120, seed=0, noise_scale=1.0):
    """Simulate the nonlinear benchmark from x_0 = 0."""
    u = nonlinear_input(horizon)
    return _simulate(nonlinear_transition, u, 0.05, "quadratic",
                     10.0 * noise_scale, 1.0 * noise_scale, seed)
