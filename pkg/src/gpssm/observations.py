"""Scalar observation channels with additive Gaussian noise.

Two families: a linear readout y = c @ x + e and a quadratic readout
y = d * |x|^2 + e, both with e ~ N(0, r).  The noise variance is stored as
log r; the readout coefficients are stored in natural space since they may
be negative.  Which parameters are learnable is chosen per instance, and
``params`` exposes exactly the learnable ones as a flat vector (log-space
for r), matching the ordering of ``log_lik_grad``.
"""

import numpy as np

_LOG_2PI = np.log(2.0 * np.pi)


class _GaussianReadout:
    """Common machinery: Gaussian likelihood around a deterministic readout."""

    def __init__(self, coeff, noise_variance, learn_coeff, learn_noise):
        self.coeff = np.atleast_1d(np.asarray(coeff, dtype=float))
        self.log_r = float(np.log(noise_variance))
        self.learn_coeff = bool(learn_coeff)
        self.learn_noise = bool(learn_noise)

    # subclasses define _readout(x) -> (...,) and _dreadout_dcoeff(x) -> (..., n_c)

    @property
    def noise_variance(self):
        return float(np.exp(self.log_r))

    @property
    def param_names(self):
        names = []
        if self.learn_coeff:
            names.extend(self._coeff_names())
        if self.learn_noise:
            names.append("r")
        return tuple(names)

    @property
    def n_params(self):
        return self.learn_coeff * self.coeff.shape[0] + self.learn_noise

    @property
    def params(self):
        parts = []
        if self.learn_coeff:
            parts.append(self.coeff)
        if self.learn_noise:
            parts.append([self.log_r])
        return np.concatenate(parts) if parts else np.zeros(0)

    def with_params(self, vec):
        vec = np.asarray(vec, dtype=float)
        out = self.copy()
        k = 0
        if self.learn_coeff:
            n = self.coeff.shape[0]
            out.coeff = vec[:n].copy()
            k = n
        if self.learn_noise:
            out.log_r = float(vec[k])
        return out

    def log_lik(self, y, x):
        """log N(y; readout(x), r); broadcasts over leading axes of x.

        Extreme residuals overflow to a log-likelihood of -inf rather than
        raising, so particle weighting can handle them as zero weight.
        """
        r = np.exp(self.log_r)
        with np.errstate(over="ignore", invalid="ignore"):
            resid = np.asarray(y, dtype=float) - self._readout(x)
            return -0.5 * (resid * resid / r + self.log_r + _LOG_2PI)

    def log_lik_grad(self, y, x):
        """Gradient of log_lik for scalar y and a single state x."""
        r = np.exp(self.log_r)
        resid = float(y) - float(self._readout(np.atleast_1d(x)))
        parts = []
        if self.learn_coeff:
            parts.append(resid / r * self._dreadout_dcoeff(np.atleast_1d(x)))
        if self.learn_noise:
            parts.append([0.5 * (resid * resid / r - 1.0)])
        return np.concatenate(parts) if parts else np.zeros(0)

    def batch_terms(self, y, x_stack, want_grad=True):
        """Summed log-likelihood (and gradient) per trajectory in a stack.

        y has shape (T+1,), x_stack (J, T+1, n_x).  Gradients follow the
        ``params`` ordering.
        """
        r = np.exp(self.log_r)
        resid = y[None, :] - self._readout(x_stack)
        ll = np.sum(-0.5 * (resid * resid / r + self.log_r + _LOG_2PI), axis=1)
        if not want_grad:
            return ll, None
        parts = []
        if self.learn_coeff:
            dpred = self._dreadout_dcoeff(x_stack)
            parts.append(np.einsum("jt,jtc->jc", resid, dpred) / r)
        if self.learn_noise:
            parts.append(0.5 * (np.sum(resid * resid, axis=1) / r
                                - resid.shape[1])[:, None])
        grads = np.concatenate(parts, axis=1) if parts else np.zeros((ll.shape[0], 0))
        return ll, grads

    def sample(self, x, rng):
        """Draw y | x; broadcasts over leading axes of x."""
        mean = self._readout(np.asarray(x, dtype=float))
        return mean + np.sqrt(np.exp(self.log_r)) * rng.standard_normal(np.shape(mean))


class LinearGaussianObservation(_GaussianReadout):
    """y = c @ x + e with e ~ N(0, r)."""

    def __init__(self, gain=2.0, noise_variance=1.0, learn_gain=False,
                 learn_noise=True):
        super().__init__(gain, noise_variance, learn_gain, learn_noise)

    def copy(self):
        return LinearGaussianObservation(self.coeff.copy(), np.exp(self.log_r),
                                         self.learn_coeff, self.learn_noise)

    def _coeff_names(self):
        if self.coeff.shape[0] == 1:
            return ["c_obs"]
        return [f"c_obs{i}" for i in range(self.coeff.shape[0])]

    def _readout(self, x):
        return np.asarray(x, dtype=float) @ self.coeff

    def _dreadout_dcoeff(self, x):
        return np.asarray(x, dtype=float)


class QuadraticGaussianObservation(_GaussianReadout):
    """y = d * sum(x^2) + e with e ~ N(0, r)."""

    def __init__(self, coeff=0.05, noise_variance=1.0, learn_coeff=False,
                 learn_noise=True):
        super().__init__([coeff], noise_variance, learn_coeff, learn_noise)

    def copy(self):
        return QuadraticGaussianObservation(float(self.coeff[0]), np.exp(self.log_r),
                                            self.learn_coeff, self.learn_noise)

    def _coeff_names(self):
        return ["d_obs"]

    def _readout(self, x):
        x = np.asarray(x, dtype=float)
        return self.coeff[0] * np.sum(x * x, axis=-1)

    def _dreadout_dcoeff(self, x):
        x = np.asarray(x, dtype=float)
        return np.sum(x * x, axis=-1)[..., None]
