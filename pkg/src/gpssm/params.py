"""The full parameter bundle of a GP state-space model.

Groups the transition kernel, transition mean, per-dimension process-noise
variance, observation channel, and the fixed initial-state prior scale.
The learnable parameters form one flat vector

    theta = [kernel log-hyperparameters | log q per state dim | observation]

which is the coordinate system the M-step optimizer works in.  Everything
positive lives in log space inside the vector; ``trace_values`` converts to
natural space for human-readable traces.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .gp_prior import JitterPolicy, TrajectoryPrior


@dataclass
class GpssmModel:
    kernel: object
    mean: object
    log_q: np.ndarray
    obs: object
    sigma0: float = 5.0
    include_x0_term: bool = True
    jitter: JitterPolicy = field(default_factory=JitterPolicy)

    def __post_init__(self):
        self.log_q = np.atleast_1d(np.asarray(self.log_q, dtype=float))

    @property
    def n_x(self):
        return self.log_q.shape[0]

    @property
    def process_noise(self):
        return np.exp(self.log_q)

    # -- flat parameter vector -------------------------------------------

    @property
    def n_theta(self):
        return self.kernel.n_params + self.n_x + self.obs.n_params

    def theta(self):
        return np.concatenate([self.kernel.log_params, self.log_q, self.obs.params])

    def with_theta(self, vec):
        vec = np.asarray(vec, dtype=float)
        nk, nq = self.kernel.n_params, self.n_x
        return replace(
            self,
            kernel=self.kernel.with_log_params(vec[:nk]),
            log_q=vec[nk:nk + nq].copy(),
            obs=self.obs.with_params(vec[nk + nq:]),
        )

    def theta_names(self):
        q_names = ("q",) if self.n_x == 1 else tuple(f"q{d}" for d in range(self.n_x))
        return tuple(self.kernel.param_names) + q_names + tuple(self.obs.param_names)

    def trace_values(self):
        """theta in natural (positive) space, for trace files and plots."""
        obs_nat = []
        for name, val in zip(self.obs.param_names, self.obs.params):
            obs_nat.append(np.exp(val) if name == "r" else val)
        return np.concatenate([np.exp(self.kernel.log_params),
                               np.exp(self.log_q),
                               np.asarray(obs_nat)])

    # -- derived objects --------------------------------------------------

    def trajectory_prior(self):
        return TrajectoryPrior(self.kernel, self.mean, self.log_q,
                               sigma0=self.sigma0,
                               include_x0_term=self.include_x0_term,
                               jitter=self.jitter)
