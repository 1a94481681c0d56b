"""Particle Gibbs with ancestor sampling for the marginalized model.

One sweep is a conditional sequential Monte Carlo pass holding a reference
trajectory fixed in the last slot.  Because the transition GP has been
integrated out, the model is non-Markovian: each particle carries the full
predictive state of its own history, and the ancestor weights for the
reference connect a candidate history to the whole remaining reference
future through its conditional density, not just one step.

The bootstrap proposal (the one-step GP predictive) makes the importance
weight exactly the observation likelihood.  All weight arithmetic happens
in log space with max subtraction.  A sweep consumes draws from a single
generator in a fixed order, so runs are reproducible bit for bit per seed.
"""

import numpy as np

from .errors import ParticleDegeneracyError


class PgasConfig:
    """Sweep settings.

    n_particles: slot count N including the reference slot.
    ancestor_truncation: number of future reference steps entering the
        ancestor weights; None means exact (all of them).  Truncation
        trades exactness of the ancestor draw for speed on long series;
        any value >= T reproduces the exact path bit for bit.
    resampling: only "systematic" is implemented.
    """

    def __init__(self, n_particles=15, ancestor_truncation=None,
                 resampling="systematic"):
        if n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if resampling != "systematic":
            raise ValueError(f"unknown resampling scheme: {resampling!r}")
        if ancestor_truncation is not None and ancestor_truncation < 1:
            raise ValueError("ancestor_truncation must be >= 1 or None")
        self.n_particles = int(n_particles)
        self.ancestor_truncation = ancestor_truncation
        self.resampling = resampling


def systematic_resample(weights, rng, n_draws=None):
    """Systematic resampling: one uniform, stratified positions.

    Returns ``n_draws`` indices (default: one per weight).  Expected
    offspring count of index i is n_draws * weights[i].  Weights must be
    normalized.
    """
    w = np.asarray(weights, dtype=float)
    if abs(float(w.sum()) - 1.0) > 1e-9:
        raise ValueError("systematic_resample expects normalized weights")
    n = len(w) if n_draws is None else int(n_draws)
    if n == 0:
        return np.zeros(0, dtype=int)
    positions = (rng.uniform() + np.arange(n)) / n
    idx = np.searchsorted(np.cumsum(w), positions)
    return np.minimum(idx, len(w) - 1)


def _categorical(weights, rng):
    cs = np.cumsum(weights)
    return int(min(np.searchsorted(cs, rng.uniform()), len(weights) - 1))


def _normalize_log(log_w, t):
    m = np.max(log_w)
    if not np.isfinite(m):
        raise ParticleDegeneracyError(
            f"all particle weights vanished at t={t}", t=t)
    w = np.exp(log_w - m)
    return w / w.sum()


class ParticleSystem:
    """Slot state of one conditional SMC pass.

    paths[i, :t+1] is slot i's trajectory so far; ``stack`` holds every
    slot's GP conditioning state batched along the slot axis (the histories
    all have equal length, which is what makes the batching possible);
    weights are the current normalized importance weights.  The reference
    slot is the last one and holds exactly the reference state at every
    time after conditioning.
    """

    def __init__(self, model, y, u, reference, cfg):
        self.prior = model.trajectory_prior()
        self.obs = model.obs
        self.y = np.asarray(y, dtype=float)
        self.u = None if u is None else np.asarray(u, dtype=float)
        if self.u is not None and self.u.ndim == 1:
            self.u = self.u[:, None]
        ref = np.asarray(reference, dtype=float)
        self.x_ref = ref[:, None] if ref.ndim == 1 else ref
        self.cfg = cfg
        self.n = cfg.n_particles
        self.horizon = self.y.shape[0] - 1
        self.n_x = model.n_x
        self.ref_slot = self.n - 1
        self.paths = np.zeros((self.n, self.horizon + 1, self.n_x))
        self.stack = None
        self.weights = None
        self.t = 0

    def _u_at(self, t):
        return None if self.u is None else self.u[t]

    def initialize(self, rng):
        """Draw fresh initial states for the free slots, condition the
        reference slot, and weight everyone by the first observation."""
        x0 = np.empty((self.n, self.n_x))
        for i in range(self.n - 1):
            x0[i] = self.prior.sample_initial(rng)
        x0[self.ref_slot] = self.x_ref[0]
        self.paths[:, 0] = x0
        self.stack = self.prior.stacked_extend(
            self.prior.stacked_initial(self.n), x0, self._u_at(0))
        log_w = self.obs.log_lik(self.y[0], x0)
        self.weights = _normalize_log(log_w, 0)
        self.t = 0

    def _future_slices(self, t):
        stop = self.horizon + 1
        if self.cfg.ancestor_truncation is not None:
            stop = min(stop, t + self.cfg.ancestor_truncation)
        x_fut = self.x_ref[t:stop]
        u_fut = None if self.u is None else self.u[t:stop]
        return x_fut, u_fut

    def ancestor_log_weights(self, t):
        """Unnormalized log weights for the reference's ancestor at time t."""
        x_fut, u_fut = self._future_slices(t)
        log_w = np.full(self.n, -np.inf)
        pos = self.weights > 0
        log_w[pos] = np.log(self.weights[pos])
        return log_w + self.prior.stacked_future_log_density(
            self.stack, x_fut, u_fut)

    def step(self, t, rng):
        """Advance the system from time t-1 to t."""
        a_ref = ancestor_sample(self, t, rng)
        if self.n > 1:
            anc = systematic_resample(self.weights, rng, n_draws=self.n - 1)
        else:
            anc = np.zeros(0, dtype=int)
        order = np.concatenate([anc, [a_ref]])

        gathered = self.stack.gather(order)
        x_t = np.empty((self.n, self.n_x))
        if self.n > 1:
            mom = self.prior.stacked_predictive(gathered)
            x_t[:-1] = (mom.mean[:-1] + np.sqrt(mom.var[:-1])
                        * rng.standard_normal((self.n - 1, self.n_x)))
        x_t[self.ref_slot] = self.x_ref[t]

        new_paths = self.paths[order]
        new_paths[:, t] = x_t
        self.paths = new_paths
        self.stack = self.prior.stacked_extend(gathered, x_t, self._u_at(t))
        log_w = self.obs.log_lik(self.y[t], x_t)
        self.weights = _normalize_log(log_w, t)
        self.t = t

    def sample_output(self, rng):
        """Draw the sweep's output trajectory from the final weights."""
        j = _categorical(self.weights, rng)
        return self.paths[j].copy()


def ancestor_sample(system, t, rng):
    """Draw the reference slot's ancestor index at time t.

    Probabilities combine the current importance weights with the
    conditional density of the remaining reference future given each
    candidate history.
    """
    log_w = system.ancestor_log_weights(t)
    return _categorical(_normalize_log(log_w, t), rng)


def pgas_sweep(model, y, u, reference, cfg, rng):
    """One conditional SMC sweep; returns the newly sampled trajectory.

    With a single particle the sweep returns the reference unchanged, which
    makes the kernel's invariance easy to check in isolation.
    """
    system = ParticleSystem(model, y, u, reference, cfg)
    system.initialize(rng)
    for t in range(1, system.horizon + 1):
        system.step(t, rng)
    return system.sample_output(rng)
