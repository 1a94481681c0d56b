"""Quasi-Newton maximizer for the M-step.

A compact BFGS with a safeguarded backtracking line search (quadratic
interpolation) on the sufficient-decrease condition, plus an expansion
phase that doubles accepted unit steps whose directional derivative is
still steep (the weak Wolfe curvature test).  The inverse-Hessian update
is skipped whenever the secant curvature product y.s is not positive, so
the approximation stays positive definite; steps whose objective comes back
non-finite are simply shrunk.  The returned point is the best one
evaluated, which makes the maximizer monotone: the final value never
falls below the starting value, and if no uphill step exists at all the
start is returned with a ``no_progress`` flag.

``maximize`` works on a callable ``fun(theta, want_grad=True)`` returning
``(value, grad)``; internally it minimizes the negated objective.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimizerConfig:
    max_iter: int = 25
    grad_tol: float = 1e-3
    sufficient_decrease: float = 1e-4
    curvature: float = 0.9
    warm_start: bool = True
    min_step: float = 1e-14
    max_backtracks: int = 40

    def __post_init__(self):
        if not 0.0 < self.sufficient_decrease < 1.0:
            raise ValueError("sufficient_decrease must lie in (0, 1)")
        if not self.sufficient_decrease < self.curvature < 1.0:
            raise ValueError("curvature must lie in (sufficient_decrease, 1)")


@dataclass
class OptimizeResult:
    theta: np.ndarray
    value: float
    start_value: float
    grad: np.ndarray
    n_iter: int
    n_evals: int
    converged: bool
    no_progress: bool
    hess_inv: np.ndarray
    #: accepted steps as (value_before, value_after, alpha, ascent_slope)
    line_searches: list = field(default_factory=list)


def maximize(fun, theta0, cfg=OptimizerConfig(), hess_inv0=None):
    """Maximize ``fun`` from ``theta0``; see the module docstring."""
    theta0 = np.asarray(theta0, dtype=float)
    n_evals = 0

    def neg(vec, want_grad=True):
        nonlocal n_evals
        n_evals += 1
        val, grad = fun(vec, want_grad)
        if want_grad:
            return -val, (None if grad is None else -np.asarray(grad, dtype=float))
        return -val, None

    x = theta0.copy()
    f, g = neg(x)
    if not np.isfinite(f):
        raise ValueError("objective is not finite at the starting point")
    f_start = f
    hess = np.eye(x.size) if hess_inv0 is None else np.array(hess_inv0, dtype=float)
    best_x, best_f, best_g = x, f, g
    records = []
    converged = bool(np.max(np.abs(g)) < cfg.grad_tol)
    accepted_any = False
    first_update = hess_inv0 is None
    it = 0

    while not converged and it < cfg.max_iter:
        it += 1
        p = -hess @ g
        slope = float(g @ p)
        if slope >= 0.0:  # stale curvature; fall back to steepest descent
            hess = np.eye(x.size)
            first_update = True
            p = -g
            slope = float(g @ p)
            if slope >= 0.0:
                break
        alpha, f_new, g_new = _backtrack(neg, x, f, p, slope, cfg)
        if alpha is None:
            break
        accepted_any = True
        records.append((-f, -f_new, alpha, -slope))
        s = alpha * p
        x_new = x + s
        y_vec = g_new - g
        ys = float(y_vec @ s)
        if ys > 0.0:
            if first_update:
                yy = float(y_vec @ y_vec)
                if yy > 0:
                    hess = (ys / yy) * np.eye(x.size)
                first_update = False
            hess = _bfgs_update(hess, s, y_vec)
        x, f, g = x_new, f_new, g_new
        if f < best_f:
            best_x, best_f, best_g = x, f, g
        converged = bool(np.max(np.abs(g)) < cfg.grad_tol)

    return OptimizeResult(
        theta=best_x.copy(),
        value=-best_f,
        start_value=-f_start,
        grad=-best_g,
        n_iter=it,
        n_evals=n_evals,
        converged=converged,
        no_progress=not accepted_any,
        hess_inv=hess,
        line_searches=records,
    )


def _backtrack(neg, x, f0, p, slope, cfg):
    """Find alpha satisfying f(x + alpha p) <= f0 + c1 alpha slope.

    A unit step accepted on sufficient decrease but still descending
    steeply (weak Wolfe curvature violated) is doubled while sufficient
    decrease keeps holding, which yields well-scaled secant pairs.
    """
    c1 = cfg.sufficient_decrease
    alpha = 1.0
    for trial in range(cfg.max_backtracks):
        f_try, g_try = neg(x + alpha * p)
        if np.isfinite(f_try) and f_try <= f0 + c1 * alpha * slope:
            if trial == 0:
                return _expand(neg, x, f0, p, slope, cfg,
                               alpha, f_try, g_try)
            return alpha, f_try, g_try
        if np.isfinite(f_try):
            # minimizer of the quadratic through (0, f0), slope, (alpha, f_try)
            denom = 2.0 * (f_try - f0 - slope * alpha)
            cand = -slope * alpha * alpha / denom if denom > 0 else 0.5 * alpha
            alpha = float(np.clip(cand, 0.1 * alpha, 0.5 * alpha))
        else:
            alpha *= 0.5
        if alpha < cfg.min_step:
            break
    return None, None, None


def _expand(neg, x, f0, p, slope, cfg, alpha, f_try, g_try, max_doublings=10):
    for _ in range(max_doublings):
        if float(g_try @ p) >= cfg.curvature * slope:
            break
        f2, g2 = neg(x + 2.0 * alpha * p)
        if not (np.isfinite(f2) and f2 <= f0 + cfg.sufficient_decrease
                * 2.0 * alpha * slope):
            break
        alpha, f_try, g_try = 2.0 * alpha, f2, g2
    return alpha, f_try, g_try


def _bfgs_update(hess, s, y_vec):
    ys = float(y_vec @ s)
    if ys <= 1e-12 * np.linalg.norm(s) * np.linalg.norm(y_vec):
        return hess
    rho = 1.0 / ys
    hy = hess @ y_vec
    term = np.outer(s, hy)
    hess = hess - rho * (term + term.T) + rho * rho * float(y_vec @ hy) * np.outer(s, s) \
        + rho * np.outer(s, s)
    return hess


def finite_diff_check(fun, theta, step=1e-6):
    """Largest relative mismatch between the analytic gradient and central
    finite differences of the value, coordinate by coordinate.

    Relative means |analytic - numeric| / max(|analytic|, |numeric|, 1),
    so tiny gradient entries are compared absolutely.
    """
    theta = np.asarray(theta, dtype=float)
    _, grad = fun(theta, True)
    grad = np.asarray(grad, dtype=float)
    worst = 0.0
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = step
        up, _ = fun(theta + e, False)
        dn, _ = fun(theta - e, False)
        fd = (up - dn) / (2.0 * step)
        err = abs(grad[i] - fd) / max(abs(grad[i]), abs(fd), 1.0)
        worst = max(worst, err)
    return worst
