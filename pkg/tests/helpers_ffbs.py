"""Scalar linear-Gaussian SSM oracle: Kalman filter plus backward sampler.

Model: x_0 ~ N(m0, p0); x_{t+1} = a x_t + b u_t + v_t, v ~ N(0, q);
y_t = c x_t + e_t, e ~ N(0, r), t = 0..T.  Written independently of the
package so it can serve as an exact-smoothing reference.
"""

import numpy as np


def kalman_filter(y, u, a, b, c, q, r, m0=0.0, p0=1.0):
    """Returns filtered means/variances and the data log-likelihood."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    u = np.zeros(n) if u is None else np.asarray(u, dtype=float)
    mf = np.empty(n)
    pf = np.empty(n)
    loglik = 0.0
    m_pred, p_pred = m0, p0
    for t in range(n):
        s = c * c * p_pred + r
        resid = y[t] - c * m_pred
        loglik += -0.5 * (np.log(2.0 * np.pi * s) + resid * resid / s)
        gain = p_pred * c / s
        mf[t] = m_pred + gain * resid
        pf[t] = (1.0 - gain * c) * p_pred
        m_pred = a * mf[t] + b * u[t]
        p_pred = a * a * pf[t] + q
    return mf, pf, loglik


def backward_sample(mf, pf, u, a, b, q, rng):
    """One joint draw from p(x_{0:T} | y_{0:T}) given filtered moments."""
    n = mf.shape[0]
    u = np.zeros(n) if u is None else np.asarray(u, dtype=float)
    x = np.empty(n)
    x[-1] = mf[-1] + np.sqrt(pf[-1]) * rng.standard_normal()
    for t in range(n - 2, -1, -1):
        prec = 1.0 / pf[t] + a * a / q
        var = 1.0 / prec
        mean = var * (mf[t] / pf[t] + a * (x[t + 1] - b * u[t]) / q)
        x[t] = mean + np.sqrt(var) * rng.standard_normal()
    return x


def ffbs_draw(y, u, a, b, c, q, r, rng, m0=0.0, p0=1.0):
    mf, pf, _ = kalman_filter(y, u, a, b, c, q, r, m0=m0, p0=p0)
    return backward_sample(mf, pf, u, a, b, q, rng)
