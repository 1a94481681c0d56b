"""Marginalized Gaussian-process prior over latent state trajectories.

With the transition function integrated out, the prior over a trajectory
x_{0:T} factorizes into one-step Gaussian predictives

    p(x_{0:T}) = p(x_0) prod_t N(x_t; mu_t(x_{0:t-1}), Sigma_t(x_{0:t-1})),

where each (mu_t, Sigma_t) is the GP posterior at the newest state-input
pair given all earlier transitions, observed through the process noise.
Each state dimension is an independent GP; all dimensions share the same
kernel and conditioning points but carry their own process-noise variance,
so the lifted Gram matrix is K + q_d I per dimension.

``GpPredictiveState`` caches the growing Cholesky factor of that lifted
Gram matrix so appending one transition costs O(t^2) instead of a fresh
O(t^3) factorization.  The newest conditioning pair is stored but not yet a
factor row; it becomes one on the next ``extend``.

``TrajectoryPrior`` also provides dense whole-trajectory evaluations
(value and analytic gradient with respect to the log hyperparameters),
vectorized over stacks of trajectories.  These agree with the sequential
factorization to floating-point accuracy and are what the EM surrogate
evaluates in its inner loop.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NumericalDegeneracyError

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class JitterPolicy:
    """Diagonal jitter escalation for failed Cholesky factorizations.

    On failure, retry with initial*(mean diagonal) added to the diagonal,
    escalating by ``factor`` up to ``maximum`` (relative) before raising.
    """

    initial: float = 1e-9
    factor: float = 10.0
    maximum: float = 1e-3

    def levels(self):
        j = self.initial
        while j <= self.maximum * (1.0 + 1e-12):
            yield j
            j *= self.factor


@dataclass(frozen=True)
class PredictiveMoments:
    """One-step predictive mean and diagonal variance, per state dimension."""

    mean: np.ndarray
    var: np.ndarray


class GpPredictiveState:
    """Incremental conditioning state of the marginalized transition GP.

    Attributes
    ----------
    z : ndarray, shape (t, d_in)
        Conditioning state-input pairs seen so far.  The newest pair is not
        yet a factor row, so factors have dimension t - 1.
    chol : ndarray, shape (n_x, t-1, t-1)
        Lower Cholesky factors of K + q_d I over ``z[:-1]``.
    white : ndarray, shape (n_x, t-1)
        Whitened residuals L^{-1} (targets - prior means) per dimension.
    log_det : ndarray, shape (n_x,)
        Running log-determinants of the factored matrices.
    diag_sum : ndarray, shape (n_x,)
        Running sums of the lifted Gram diagonals (sets the jitter scale).
    """

    __slots__ = ("z", "chol", "white", "log_det", "diag_sum")

    def __init__(self, z, chol, white, log_det, diag_sum):
        self.z = z
        self.chol = chol
        self.white = white
        self.log_det = log_det
        self.diag_sum = diag_sum

    @property
    def n_points(self):
        return self.z.shape[0]

    @property
    def n_factored(self):
        return self.chol.shape[1]


class StackedStates:
    """Conditioning states of many histories sharing one length.

    Same content as a list of ``GpPredictiveState`` objects, but stored
    with a leading batch axis and with the factor inverse instead of the
    factor, so growing and conditioning reduce to batched matrix products
    instead of per-history triangular solves.  Used by the particle sweep,
    where every slot's history has the same length at every time.

    linv[i, d] is the inverse of the lower Cholesky factor that
    ``GpPredictiveState.chol[d]`` would hold for history i.
    """

    __slots__ = ("z", "linv", "white", "log_det", "diag_sum")

    def __init__(self, z, linv, white, log_det, diag_sum):
        self.z = z                  # (n, t, d_in)
        self.linv = linv            # (n, n_x, t-1, t-1)
        self.white = white          # (n, n_x, t-1)
        self.log_det = log_det      # (n, n_x)
        self.diag_sum = diag_sum    # (n, n_x)

    @property
    def n_batch(self):
        return self.z.shape[0]

    @property
    def n_points(self):
        return self.z.shape[1]

    def gather(self, idx):
        """Reindex the batch axis; duplicated indices share no storage."""
        idx = np.asarray(idx, dtype=int)
        return StackedStates(self.z[idx], self.linv[idx], self.white[idx],
                             self.log_det[idx], self.diag_sum[idx])


class TrajectoryPrior:
    """Trajectory-level operations for one hyperparameter setting.

    Parameters
    ----------
    kernel : Kernel
        Covariance function on the joint state-input space.
    mean : callable
        Mean function mapping (..., d_in) points to (..., n_x) values.
    log_q : array-like, shape (n_x,)
        Log process-noise variance per state dimension.
    sigma0 : float
        Standard deviation of the zero-mean initial-state prior.  Fixed,
        never learned, so its gradient contribution is identically zero.
    include_x0_term : bool
        Whether trajectory log-densities include the initial-state term.
    """

    def __init__(self, kernel, mean, log_q, sigma0=5.0, include_x0_term=True,
                 jitter=JitterPolicy()):
        self.kernel = kernel
        self.mean = mean
        self.log_q = np.atleast_1d(np.asarray(log_q, dtype=float))
        self.n_x = self.log_q.shape[0]
        self.sigma0 = float(sigma0)
        self.include_x0_term = include_x0_term
        self.jitter = jitter

    @property
    def q(self):
        return np.exp(self.log_q)

    # -- incremental interface -------------------------------------------

    def initial_state(self, d_in):
        """Empty conditioning state over points of dimension ``d_in``."""
        return GpPredictiveState(
            z=np.zeros((0, d_in)),
            chol=np.zeros((self.n_x, 0, 0)),
            white=np.zeros((self.n_x, 0)),
            log_det=np.zeros(self.n_x),
            diag_sum=np.zeros(self.n_x),
        )

    def extend(self, state, x_new, u_new=None):
        """Absorb the transition to ``x_new`` and return the grown state.

        The pair previously stored as newest becomes a factor row with
        target ``x_new``; (x_new, u_new) becomes the new newest pair.
        Value semantics: the input state is never mutated.
        """
        x_new = np.atleast_1d(np.asarray(x_new, dtype=float))
        pair = x_new if u_new is None else np.concatenate(
            [x_new, np.atleast_1d(np.asarray(u_new, dtype=float))])
        t = state.n_points
        if t == 0:
            s = self.initial_state(pair.shape[0])
            return GpPredictiveState(pair[None, :].copy(), s.chol, s.white,
                                     s.log_det, s.diag_sum)

        z_prev = state.z[-1]
        n = state.n_factored
        k_vec = self.kernel(z_prev[None, None, :], state.z[None, :t - 1, :])[0, 0]
        kzz = float(self.kernel(z_prev[None, None, :], z_prev[None, None, :])[0, 0, 0])
        m_prev = self.mean(z_prev[None, :])[0]
        q = self.q

        chol = np.zeros((self.n_x, n + 1, n + 1))
        white = np.zeros((self.n_x, n + 1))
        log_det = state.log_det.copy()
        diag_sum = state.diag_sum.copy()
        for d in range(self.n_x):
            if n > 0:
                c = solve_triangular(state.chol[d], k_vec, lower=True,
                                     check_finite=False)
            else:
                c = np.zeros(0)
            base = kzz + q[d]
            piv2 = base - c @ c
            if piv2 <= 0.0:
                piv2 = self._retry_pivot(base, c, diag_sum[d] + base, n + 1)
            piv = np.sqrt(piv2)
            chol[d, :n, :n] = state.chol[d]
            chol[d, n, :n] = c
            chol[d, n, n] = piv
            white[d, :n] = state.white[d]
            white[d, n] = (x_new[d] - m_prev[d] - c @ state.white[d]) / piv
            log_det[d] += 2.0 * np.log(piv)
            diag_sum[d] += base
        z = np.concatenate([state.z, pair[None, :]], axis=0)
        return GpPredictiveState(z, chol, white, log_det, diag_sum)

    def _retry_pivot(self, base, c, diag_total, count):
        scale = diag_total / count
        last = None
        for rel in self.jitter.levels():
            last = rel
            piv2 = base + rel * scale - c @ c
            if piv2 > 0.0:
                return piv2
        raise NumericalDegeneracyError(
            "predictive factor lost positive definiteness", jitter=last)

    def predictive_step(self, state):
        """Predictive moments of the next state given the current history."""
        if state.n_points == 0:
            raise ValueError("predictive_step requires at least one conditioning point")
        z_new = state.z[-1]
        n = state.n_factored
        kzz = float(self.kernel(z_new[None, None, :], z_new[None, None, :])[0, 0, 0])
        m_new = self.mean(z_new[None, :])[0]
        q = self.q
        mean = np.empty(self.n_x)
        var = np.empty(self.n_x)
        if n == 0:
            mean[:] = m_new
            var[:] = kzz + q
            return PredictiveMoments(mean, var)
        k_vec = self.kernel(z_new[None, None, :], state.z[None, :n, :])[0, 0]
        for d in range(self.n_x):
            c = solve_triangular(state.chol[d], k_vec, lower=True, check_finite=False)
            mean[d] = m_new[d] + c @ state.white[d]
            var[d] = kzz + q[d] - c @ c
            if var[d] <= 0.0:
                raise NumericalDegeneracyError(
                    "non-positive predictive variance", jitter=None)
        return PredictiveMoments(mean, var)

    # -- initial-state prior ---------------------------------------------

    def log_initial_density(self, x0):
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        v = self.sigma0 ** 2
        return float(-0.5 * np.sum(x0 * x0) / v
                     - 0.5 * x0.shape[0] * (_LOG_2PI + np.log(v)))

    def sample_initial(self, rng):
        return self.sigma0 * rng.standard_normal(self.n_x)

    # -- whole-trajectory evaluations ------------------------------------

    def trajectory_log_prior(self, x, u=None):
        """Sequential evaluation of log p(x_{0:T}) via one-step predictives."""
        x = _as_states(x, self.n_x)
        total = self.log_initial_density(x[0]) if self.include_x0_term else 0.0
        state = self.extend(self.initial_state(0), x[0], _row(u, 0))
        for t in range(1, x.shape[0]):
            mom = self.predictive_step(state)
            total += float(np.sum(_normal_logpdf(x[t], mom.mean, mom.var)))
            state = self.extend(state, x[t], _row(u, t))
        return total

    def conditional_future_log_density(self, state, x_future, u_future=None):
        """log p(x'_{t:T} | history) for the fixed future block x_future.

        ``state`` encodes the history x_{0:t-1}; x_future rows are the
        future states x'_t..x'_T; u_future rows (when present) are the
        inputs u_t.. aligned with x_future (the final row is unused).
        Evaluated in one batched Gaussian conditioning step, which agrees
        with chaining ``predictive_step``/``extend`` over the future.
        """
        if state.n_points == 0:
            raise ValueError("conditional evaluation requires a nonempty history")
        x_future = _as_states(x_future, self.n_x)
        m = x_future.shape[0]
        if m == 0:
            return 0.0
        if u_future is None:
            future_pairs = x_future[:-1]
        else:
            u_future = np.atleast_2d(np.asarray(u_future, dtype=float).reshape(m, -1))
            future_pairs = np.concatenate([x_future[:-1], u_future[:m - 1]], axis=1)
        z_app = np.concatenate([state.z[-1][None, :], future_pairs], axis=0)
        n = state.n_factored

        k_app = self.kernel(z_app[None], z_app[None])[0]
        m_app = self.mean(z_app)
        q = self.q
        total = 0.0
        for d in range(self.n_x):
            if n > 0:
                k_cross = self.kernel(z_app[None], state.z[None, :n, :])[0]
                c_mat = solve_triangular(state.chol[d], k_cross.T, lower=True,
                                         check_finite=False)
                s_mat = k_app - c_mat.T @ c_mat
                mean = m_app[:, d] + c_mat.T @ state.white[d]
            else:
                s_mat = k_app.copy()
                mean = m_app[:, d]
            s_mat[np.diag_indices(m)] += q[d]
            l_s = self._chol(s_mat)
            resid = x_future[:, d] - mean
            w = solve_triangular(l_s, resid, lower=True, check_finite=False)
            total += (-0.5 * m * _LOG_2PI
                      - float(np.sum(np.log(np.diag(l_s))))
                      - 0.5 * float(w @ w))
        return float(total)

    def _chol(self, mat):
        try:
            return np.linalg.cholesky(mat)
        except np.linalg.LinAlgError:
            pass
        scale = float(np.mean(np.diag(mat)))
        last = None
        for rel in self.jitter.levels():
            last = rel
            try:
                return np.linalg.cholesky(mat + rel * scale * np.eye(mat.shape[0]))
            except np.linalg.LinAlgError:
                continue
        raise NumericalDegeneracyError(
            "conditioning matrix is not positive definite", jitter=last)

    # -- batched incremental interface -----------------------------------
    #
    # Same one-step operations as above, vectorized over a batch of
    # equal-length histories.  Agrees with the per-history methods to
    # floating-point accuracy; exists because particle sweeps evaluate
    # them for every slot at every time step.

    def stacked_initial(self, n_batch):
        """Empty batched conditioning state for ``n_batch`` histories."""
        return StackedStates(
            z=np.zeros((n_batch, 0, 0)),
            linv=np.zeros((n_batch, self.n_x, 0, 0)),
            white=np.zeros((n_batch, self.n_x, 0)),
            log_det=np.zeros((n_batch, self.n_x)),
            diag_sum=np.zeros((n_batch, self.n_x)),
        )

    def _stacked_pairs(self, x_new, u_new, n_batch):
        x_new = np.asarray(x_new, dtype=float).reshape(n_batch, self.n_x)
        if u_new is None:
            return x_new
        u_row = np.atleast_1d(np.asarray(u_new, dtype=float))
        return np.concatenate(
            [x_new, np.broadcast_to(u_row, (n_batch, u_row.shape[0]))], axis=1)

    def _stacked_project(self, ss):
        """c = L^{-1} k_vec, c.c and c.white for the newest pair of each
        history, all dimensions at once."""
        nf = ss.n_points - 1
        z_prev = ss.z[:, -1, :]
        kzz = self.kernel.diag(z_prev)
        m_prev = self.mean(z_prev)
        if nf == 0:
            zero = np.zeros((ss.n_batch, self.n_x))
            return np.zeros((ss.n_batch, self.n_x, 0)), zero, zero, kzz, m_prev
        k_vec = self.kernel(z_prev[:, None, :], ss.z[:, :nf, :])[:, 0, :]
        c = (ss.linv @ k_vec[:, None, :, None])[..., 0]
        cc = np.einsum("pda,pda->pd", c, c)
        cw = np.einsum("pda,pda->pd", c, ss.white)
        return c, cc, cw, kzz, m_prev

    def stacked_extend(self, ss, x_new, u_new=None):
        """Batched ``extend``: absorb one transition in every history."""
        t = ss.n_points
        nb = ss.n_batch
        pair = self._stacked_pairs(x_new, u_new, nb)
        if t == 0:
            fresh = self.stacked_initial(nb)
            return StackedStates(pair[:, None, :].copy(), fresh.linv,
                                 fresh.white, fresh.log_det, fresh.diag_sum)
        x_new = np.asarray(x_new, dtype=float).reshape(nb, self.n_x)
        nf = t - 1
        c, cc, cw, kzz, m_prev = self._stacked_project(ss)
        base = kzz[:, None] + self.q[None, :]
        piv2 = base - cc
        bad = piv2 <= 0.0
        if np.any(bad):
            # per-entry escalation, same ladder as the single-history path
            scale = (ss.diag_sum + base) / t
            last = None
            for rel in self.jitter.levels():
                last = rel
                piv2 = np.where(bad, base + rel * scale - cc, piv2)
                bad = piv2 <= 0.0
                if not np.any(bad):
                    break
            if np.any(bad):
                raise NumericalDegeneracyError(
                    "predictive factor lost positive definiteness", jitter=last)
        piv = np.sqrt(piv2)
        linv = np.zeros((nb, self.n_x, t, t))
        linv[:, :, :nf, :nf] = ss.linv
        if nf > 0:
            row = (c[:, :, None, :] @ ss.linv)[:, :, 0, :]
            linv[:, :, nf, :nf] = -row / piv[..., None]
        linv[:, :, nf, nf] = 1.0 / piv
        w_last = (x_new - m_prev - cw) / piv
        white = np.concatenate([ss.white, w_last[..., None]], axis=-1)
        z = np.concatenate([ss.z, pair[:, None, :]], axis=1)
        return StackedStates(z, linv, white,
                             ss.log_det + 2.0 * np.log(piv),
                             ss.diag_sum + base)

    def stacked_predictive(self, ss):
        """Batched ``predictive_step`` over every history in the stack."""
        if ss.n_points == 0:
            raise ValueError("predictive_step requires at least one conditioning point")
        _, cc, cw, kzz, m_last = self._stacked_project(ss)
        mean = m_last + cw
        var = kzz[:, None] + self.q[None, :] - cc
        if np.any(var <= 0.0):
            raise NumericalDegeneracyError(
                "non-positive predictive variance", jitter=None)
        return PredictiveMoments(mean, var)

    def stacked_future_log_density(self, ss, x_future, u_future=None):
        """Batched ``conditional_future_log_density``; returns (n_batch,).

        The future block is shared: every history is scored against the
        same x_future / u_future rows.
        """
        if ss.n_points == 0:
            raise ValueError("conditional evaluation requires a nonempty history")
        x_future = _as_states(x_future, self.n_x)
        m = x_future.shape[0]
        nb = ss.n_batch
        if m == 0:
            return np.zeros(nb)
        if u_future is None:
            future_pairs = x_future[:-1]
        else:
            u_future = np.atleast_2d(
                np.asarray(u_future, dtype=float).reshape(m, -1))
            future_pairs = np.concatenate(
                [x_future[:-1], u_future[:m - 1]], axis=1)
        z_app = np.concatenate(
            [ss.z[:, -1:, :],
             np.broadcast_to(future_pairs, (nb,) + future_pairs.shape)], axis=1)
        k_app = self.kernel(z_app, z_app)
        m_app = np.swapaxes(self.mean(z_app), 1, 2)        # (nb, n_x, m)
        nf = ss.n_points - 1
        if nf > 0:
            k_cross = self.kernel(ss.z[:, :nf, :], z_app)  # (nb, nf, m)
            cmat = ss.linv @ k_cross[:, None, :, :]
            ct = np.swapaxes(cmat, -1, -2)
            smat = k_app[:, None, :, :] - ct @ cmat
            mean = m_app + (ct @ ss.white[..., None])[..., 0]
        else:
            smat = np.repeat(k_app[:, None, :, :], self.n_x, axis=1)
            mean = m_app
        smat[..., np.arange(m), np.arange(m)] += self.q[None, :, None]
        l_s = self._batch_chol(smat)
        resid = x_future.T[None, :, :] - mean
        w = np.linalg.solve(l_s, resid[..., None])[..., 0]
        log_diag = np.log(np.diagonal(l_s, axis1=-2, axis2=-1))
        per_dim = (-0.5 * m * _LOG_2PI - log_diag.sum(axis=-1)
                   - 0.5 * np.sum(w * w, axis=-1))
        return per_dim.sum(axis=1)

    # -- dense batched evaluations ---------------------------------------

    def dense_log_prior(self, x, u=None):
        """Whole-trajectory log-density via one dense factorization."""
        x = _as_states(x, self.n_x)
        vals, _ = self.batch_value_and_grad(x[None], u, want_grad=False)
        return float(vals[0])

    def trajectory_log_prior_grad(self, x, u=None):
        """Analytic gradient of the trajectory log-prior.

        Ordered as [kernel log-hyperparameters..., log q per state dim].
        The initial-state term carries no learnable parameter, so it never
        contributes.
        """
        x = _as_states(x, self.n_x)
        _, grads = self.batch_value_and_grad(x[None], u, want_grad=True)
        return grads[0]

    def batch_value_and_grad(self, x_stack, u=None, want_grad=True):
        """Vectorized dense evaluation over a stack of trajectories.

        Parameters
        ----------
        x_stack : ndarray, shape (J, T+1, n_x)
        u : ndarray or None, shape (T+1, n_u)
            Shared exogenous inputs.

        Returns
        -------
        vals : ndarray, shape (J,)
        grads : ndarray, shape (J, n_kernel_params + n_x) or None
        """
        cache = self.prepare_dense(x_stack, u)
        return self.eval_dense(cache, want_grad=want_grad)

    def prepare_dense(self, x_stack, u=None):
        """Hyperparameter-independent tensors for ``eval_dense``.

        The mean function and initial-state scale are fixed, so residuals
        and the x0 term can be frozen here; only the kernel Gram matrices
        and noise lift change with theta, and those rebuild from the kernel
        cache.  The cache stays valid across ``with_log_params`` updates of
        the same kernel family.
        """
        big = x_stack.shape[0]
        horizon = x_stack.shape[1] - 1
        cache = {"big": big, "horizon": horizon,
                 "x0": self._x0_batch(x_stack) if self.include_x0_term else None}
        if horizon == 0:
            return cache
        u_stack = _batch_inputs(u, big)
        if u_stack is None:
            z = x_stack[:, :-1, :]
        else:
            z = np.concatenate([x_stack[:, :-1, :], u_stack[:, :-1, :]], axis=2)
        means = self.mean(z)
        cache["kernel"] = self.kernel.precompute(z)
        cache["resid"] = np.stack(
            [x_stack[:, 1:, d] - means[..., d] for d in range(self.n_x)], axis=0)
        return cache

    def eval_dense(self, cache, want_grad=True):
        big, horizon = cache["big"], cache["horizon"]
        n_grad = self.kernel.n_params + self.n_x
        if horizon == 0:
            vals = np.zeros(big) if cache["x0"] is None else cache["x0"].copy()
            return vals, (np.zeros((big, n_grad)) if want_grad else None)
        gram = self.kernel.gram_cached(cache["kernel"])
        q = self.q

        vals = np.zeros(big)
        grads = np.zeros((big, n_grad)) if want_grad else None
        inv_all = np.empty((self.n_x, big, horizon, horizon)) if want_grad else None
        alpha_all = np.empty((self.n_x, big, horizon))
        for d in range(self.n_x):
            lifted = gram + q[d] * np.eye(horizon)
            chol = self._batch_chol(lifted)
            resid = cache["resid"][d]
            log_det = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=-2, axis2=-1)),
                                   axis=-1)
            # invert through the factor so any jitter it absorbed is shared
            # by the value and the gradient
            linv = np.linalg.inv(chol)
            inv = np.einsum("jba,jbc->jac", linv, linv)
            alpha = np.einsum("jab,jb->ja", inv, resid)
            quad = np.einsum("ja,ja->j", resid, alpha)
            vals += -0.5 * quad - 0.5 * log_det - 0.5 * horizon * _LOG_2PI
            alpha_all[d] = alpha
            if want_grad:
                inv_all[d] = inv
                grads[:, self.kernel.n_params + d] = 0.5 * q[d] * (
                    np.einsum("ja,ja->j", alpha, alpha)
                    - np.einsum("jaa->j", inv))
        if want_grad:
            for h, g_h in enumerate(self.kernel.grad_gram_cached(cache["kernel"])):
                for d in range(self.n_x):
                    grads[:, h] += 0.5 * (
                        np.einsum("ja,jab,jb->j", alpha_all[d], g_h, alpha_all[d])
                        - np.einsum("jab,jab->j", inv_all[d], g_h))
        if cache["x0"] is not None:
            vals += cache["x0"]
        return vals, grads

    def _x0_batch(self, x_stack):
        v = self.sigma0 ** 2
        x0 = x_stack[:, 0, :]
        return (-0.5 * np.sum(x0 * x0, axis=1) / v
                - 0.5 * self.n_x * (_LOG_2PI + np.log(v)))

    def _batch_chol(self, mats):
        try:
            return np.linalg.cholesky(mats)
        except np.linalg.LinAlgError:
            pass
        horizon = mats.shape[-1]
        scale = float(np.mean(np.diagonal(mats, axis1=-2, axis2=-1)))
        last = None
        for rel in self.jitter.levels():
            last = rel
            try:
                return np.linalg.cholesky(mats + rel * scale * np.eye(horizon))
            except np.linalg.LinAlgError:
                continue
        raise NumericalDegeneracyError(
            "lifted Gram matrix is not positive definite", jitter=last)


def _normal_logpdf(x, mean, var):
    d = x - mean
    return -0.5 * (d * d / var + np.log(var) + _LOG_2PI)


def _as_states(x, n_x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[1] != n_x:
        raise ValueError(f"expected state dimension {n_x}, got {x.shape[1]}")
    return x


def _row(u, t):
    if u is None:
        return None
    u = np.asarray(u, dtype=float)
    return u[t] if u.ndim > 1 else np.atleast_1d(u[t])


def _batch_inputs(u, big):
    if u is None:
        return None
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    return np.broadcast_to(u, (big,) + u.shape)
