"""Particle stochastic approximation EM driver and prediction utilities.

Each iteration draws one trajectory with the conditional particle sweep,
folds it into the weighted surrogate, and maximizes the surrogate over the
hyperparameters with the warm-started quasi-Newton step.  The maximizer
never returns a point below its start, so the surrogate value is monotone
within every iteration; the per-iteration (start, end) pairs are recorded
so that property is checkable after the fact.

``RunArtifacts`` captures everything a later prediction needs: the final
model, the parameter trace in natural space, the last sampled trajectory,
and the surviving surrogate members.
"""

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import NumericalDegeneracyError
from .optimize import maximize
from .pgas import pgas_sweep
from .saem import WeightedTrajectorySet, make_objective


@dataclass
class RunArtifacts:
    model: object
    trace: np.ndarray                 # (K, n_theta + 1): natural values, q_hat
    trace_names: tuple
    trajectory: np.ndarray            # final sampled trajectory (T+1, n_x)
    set_trajectories: np.ndarray      # surviving surrogate members (J, T+1, n_x)
    set_weights: np.ndarray
    monotone: np.ndarray              # (K, 2): surrogate value at (theta_{k-1}, theta_k)
    seed: int
    iterations: int
    runtime: float
    config_echo: dict = field(default=None)

    def save(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        header = "k," + ",".join(self.trace_names) + ",q_hat"
        rows = np.column_stack([np.arange(1, self.trace.shape[0] + 1), self.trace])
        np.savetxt(out / "trace.csv", rows, delimiter=",", header=header,
                   comments="", fmt="%.17g")
        np.savez(out / "state.npz",
                 theta=self.model.theta(),
                 trajectory=self.trajectory,
                 set_trajectories=self.set_trajectories,
                 set_weights=self.set_weights,
                 monotone=self.monotone)
        meta = {"seed": self.seed, "iterations": self.iterations,
                "runtime": self.runtime, "trace_names": list(self.trace_names),
                "config": self.config_echo}
        (out / "meta.json").write_text(json.dumps(meta, indent=2))

    @staticmethod
    def load(out_dir, data):
        """Rebuild artifacts from disk; needs the training dataset to
        resolve the config's auto-initialized values."""
        from .config import ExperimentConfig
        out = Path(out_dir)
        meta = json.loads((out / "meta.json").read_text())
        if meta.get("config") is None:
            raise ValueError("artifacts were saved without a config echo")
        cfg = ExperimentConfig.from_dict(meta["config"])
        model0, _ = cfg.build_model(data)
        state = np.load(out / "state.npz")
        trace = np.loadtxt(out / "trace.csv", delimiter=",", skiprows=1, ndmin=2)
        return RunArtifacts(
            model=model0.with_theta(state["theta"]),
            trace=trace[:, 1:],
            trace_names=tuple(meta["trace_names"]),
            trajectory=state["trajectory"],
            set_trajectories=state["set_trajectories"],
            set_weights=state["set_weights"],
            monotone=state["monotone"],
            seed=meta["seed"],
            iterations=meta["iterations"],
            runtime=meta["runtime"],
            config_echo=meta["config"],
        )


def run_psaem(model, data, schedule, pgas_cfg, opt_cfg, iterations, seed,
              initial_trajectory, prune_threshold=1e-6, callback=None):
    """Core EM loop; returns RunArtifacts (without a config echo)."""
    rng = np.random.default_rng(seed)
    y = np.asarray(data.y, dtype=float)
    u = data.u
    ref = np.asarray(initial_trajectory, dtype=float)
    if ref.ndim == 1:
        ref = ref[:, None]
    tset = WeightedTrajectorySet(prune_threshold)
    theta = model.theta()
    hess = None
    trace = np.empty((iterations, theta.size + 1))
    monotone = np.empty((iterations, 2))
    started = time.perf_counter()

    for k in range(1, iterations + 1):
        try:
            ref = pgas_sweep(model, y, u, ref, pgas_cfg, rng)
            tset.update(ref, schedule.step_size(k))
            fun = _guarded(make_objective(tset, model, y, u))
            res = maximize(fun, theta, opt_cfg,
                           hess_inv0=hess if opt_cfg.warm_start else None)
        except NumericalDegeneracyError as exc:
            raise NumericalDegeneracyError(
                f"iteration {k}: {exc}", jitter=exc.jitter) from exc
        theta = res.theta
        model = model.with_theta(theta)
        hess = res.hess_inv
        monotone[k - 1] = (res.start_value, res.value)
        trace[k - 1, :-1] = model.trace_values()
        trace[k - 1, -1] = res.value
        if callback is not None:
            callback(k, model, res)

    return RunArtifacts(
        model=model,
        trace=trace,
        trace_names=model.theta_names(),
        trajectory=ref,
        set_trajectories=tset.stacked(),
        set_weights=tset.weights.copy(),
        monotone=monotone,
        seed=seed,
        iterations=iterations,
        runtime=time.perf_counter() - started,
    )


def _guarded(fun):
    """Map degeneracy at trial points to -inf so the line search shrinks;
    degeneracy at the M-step's starting point still raises."""
    calls = 0

    def wrapped(vec, want_grad=True):
        nonlocal calls
        calls += 1
        try:
            return fun(vec, want_grad)
        except NumericalDegeneracyError:
            if calls == 1:
                raise
            return -np.inf, None

    return wrapped


def identify(data, config, callback=None):
    """Run the full identification configured by ``config`` on ``data``."""
    model0, init_traj = config.build_model(data)
    sched = config.sections["schedule"]
    arts = run_psaem(model0, data, config.schedule(), config.pgas(),
                     config.optimizer(), config.sections["run"]["iterations"],
                     config.sections["run"]["seed"], init_traj,
                     prune_threshold=sched["prune_threshold"],
                     callback=callback)
    arts.config_echo = config.to_dict()
    return arts


# -- prediction ------------------------------------------------------------


class ConditionedPredictor:
    """Transition GP conditioned on the transitions of one trajectory."""

    def __init__(self, model, x_traj, u=None):
        x = np.asarray(x_traj, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        self.model = model
        self.n_x = model.n_x
        horizon = x.shape[0] - 1
        if u is None:
            z = x[:-1]
        else:
            u = np.asarray(u, dtype=float)
            if u.ndim == 1:
                u = u[:, None]
            z = np.concatenate([x[:-1], u[:-1]], axis=1)
        self.z = z
        self._solves = []
        if horizon > 0:
            gram = model.kernel.gram(z[None])[0]
            means = model.mean(z)
            for d in range(self.n_x):
                lifted = gram + model.process_noise[d] * np.eye(horizon)
                factor = cho_factor(lifted, lower=True)
                alpha = cho_solve(factor, x[1:, d] - means[:, d])
                self._solves.append((factor, alpha))

    def predict(self, z_star, include_process_noise=True):
        """Mean and variance of the next state at query pairs z_star
        (n, d_in); variance includes the process noise unless disabled."""
        z_star = np.atleast_2d(np.asarray(z_star, dtype=float))
        k_diag = self.model.kernel.diag(z_star)
        m_star = self.model.mean(z_star)
        mean = np.empty((z_star.shape[0], self.n_x))
        var = np.empty((z_star.shape[0], self.n_x))
        q = self.model.process_noise
        if not self._solves:
            for d in range(self.n_x):
                mean[:, d] = m_star[:, d]
                var[:, d] = k_diag + (q[d] if include_process_noise else 0.0)
            return mean, var
        k_cross = self.model.kernel(z_star[None], self.z[None])[0]
        for d in range(self.n_x):
            factor, alpha = self._solves[d]
            mean[:, d] = m_star[:, d] + k_cross @ alpha
            sol = cho_solve(factor, k_cross.T)
            var[:, d] = k_diag - np.einsum("na,an->n", k_cross, sol)
            var[:, d] = np.maximum(var[:, d], 0.0)
            if include_process_noise:
                var[:, d] += q[d]
        return mean, var


def _predictors(artifacts, average_top=0):
    """Trajectories to condition on, weighted per the averaging flag."""
    model = artifacts.model
    if average_top and len(artifacts.set_weights) > 0:
        order = np.argsort(artifacts.set_weights)[::-1][:average_top]
        weights = artifacts.set_weights[order]
        weights = weights / weights.sum()
        trajs = [artifacts.set_trajectories[j] for j in order]
    else:
        weights = np.ones(1)
        trajs = [artifacts.trajectory]
    return model, trajs, weights


def predict_onestep(artifacts, train_u, test, mode="state",
                    include_process_noise=True, average_top=0):
    """One-step-ahead predictions at the test set's true state-input pairs.

    mode "state": predictive of x_{t+1} (process noise included by default);
    mode "step":  predictive of the transition increment f(x_t, u_t) - x_t
                  with the noise-free variance.

    Returns a dict of aligned arrays: x_star, u_star, mean, std, truth
    (truth is NaN where unknown).
    """
    if test.x_true is None:
        raise ValueError("one-step prediction needs the test set's x_true column")
    model, trajs, weights = _predictors(artifacts, average_top)
    if model.n_x != 1:
        raise ValueError("one-step prediction tables support scalar states")
    x_star = np.asarray(test.x_true, dtype=float)[:-1]
    u_star = None if test.u is None else np.asarray(test.u, dtype=float)[:-1]
    z_star = x_star[:, None] if u_star is None else np.column_stack([x_star, u_star])

    include_q = include_process_noise and mode == "state"
    means = np.empty((len(trajs), x_star.shape[0]))
    varis = np.empty_like(means)
    for j, traj in enumerate(trajs):
        pred = ConditionedPredictor(model, traj, train_u)
        m, v = pred.predict(z_star, include_process_noise=include_q)
        means[j], varis[j] = m[:, 0], v[:, 0]
    mean = weights @ means
    second = weights @ (varis + means ** 2)
    var = np.maximum(second - mean ** 2, 0.0)

    if mode == "step":
        mean = mean - x_star
        truth = np.full_like(mean, np.nan)
    elif mode == "state":
        truth = np.asarray(test.x_true, dtype=float)[1:]
    else:
        raise ValueError(f"unknown prediction mode {mode!r}")
    return {
        "x_star": x_star,
        "u_star": np.zeros_like(x_star) if u_star is None else u_star,
        "mean": mean,
        "std": np.sqrt(var),
        "truth": truth,
    }


def predict_surface(artifacts, train_u, x_grid, u_grid, average_top=0):
    """Posterior transition mean/std on a state-input lattice (noise-free).

    Returns the same dict layout as ``predict_onestep`` (truth is NaN),
    flattened over the lattice in row-major order (x outer, u inner).
    """
    model, trajs, weights = _predictors(artifacts, average_top)
    if model.n_x != 1:
        raise ValueError("surface prediction supports scalar states")
    xg = np.asarray(x_grid, dtype=float)
    ug = np.asarray(u_grid, dtype=float)
    xs, us = np.meshgrid(xg, ug, indexing="ij")
    z_star = np.column_stack([xs.ravel(), us.ravel()])
    means = np.empty((len(trajs), z_star.shape[0]))
    varis = np.empty_like(means)
    for j, traj in enumerate(trajs):
        pred = ConditionedPredictor(model, traj, train_u)
        m, v = pred.predict(z_star, include_process_noise=False)
        means[j], varis[j] = m[:, 0], v[:, 0]
    mean = weights @ means
    second = weights @ (varis + means ** 2)
    std = np.sqrt(np.maximum(second - mean ** 2, 0.0))
    return {
        "x_star": z_star[:, 0],
        "u_star": z_star[:, 1],
        "mean": mean,
        "std": std,
        "truth": np.full_like(mean, np.nan),
    }


def write_predictions(path, table):
    """Write a prediction table as CSV with header x_star,u_star,mean,std,truth."""
    cols = np.column_stack([table["x_star"], table["u_star"], table["mean"],
                            table["std"], table["truth"]])
    np.savetxt(path, cols, delimiter=",", header="x_star,u_star,mean,std,truth",
               comments="", fmt="%.17g")
