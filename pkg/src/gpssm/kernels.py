"""Covariance and mean functions on the joint state-input space.

Kernels operate on point arrays whose last axis is the input dimension and
accept arbitrary leading batch axes, so a single call can produce a stack of
Gram matrices.  Every positive hyperparameter is stored as its logarithm;
``grad_gram`` and friends differentiate with respect to those log-values,
which is what an unconstrained optimizer wants.

For repeated Gram evaluations on a fixed point set with changing
hyperparameters (the inner loop of the M-step), ``precompute`` builds a
cache of hyperparameter-independent tensors and ``gram_cached`` /
``grad_gram_cached`` rebuild the Gram matrix and its gradients from it.
"""

import numpy as np

_SQRT3 = np.sqrt(3.0)
_SQRT5 = np.sqrt(5.0)


def _pairwise_sqdiff(a, b):
    """Per-dimension squared differences, shape (..., n, m, d)."""
    return (a[..., :, None, :] - b[..., None, :, :]) ** 2


class Kernel:
    """Base class: a positive-definite covariance function with log-stored
    hyperparameters exposed as a flat vector."""

    #: ordered hyperparameter names (natural-space meaning, log-stored)
    param_names = ()

    @property
    def log_params(self):
        raise NotImplementedError

    def with_log_params(self, vec):
        """Return a copy with the flat log-hyperparameter vector replaced."""
        raise NotImplementedError

    @property
    def n_params(self):
        return len(self.param_names)

    def __call__(self, a, b):
        """Cross-covariance matrix between point sets a (...,n,d), b (...,m,d)."""
        raise NotImplementedError

    def gram(self, z):
        return self(z, z)

    def diag(self, z):
        """k(z_i, z_i) for each row, shape (..., n)."""
        k = self(z[..., None, :], z[..., None, :])
        return k[..., 0, 0]

    def grad(self, a, b):
        """Stack of d k / d(log-param) cross-matrices, shape (n_params, ..., n, m)."""
        return np.stack(list(self.grad_seq(a, b)), axis=0)

    def grad_seq(self, a, b):
        """Yield one gradient matrix per hyperparameter, in param_names order."""
        raise NotImplementedError

    # -- cached evaluation on a fixed point set ---------------------------

    def precompute(self, z):
        """Hyperparameter-independent tensors for repeated Gram rebuilds."""
        return {"z": z}

    def gram_cached(self, cache):
        return self.gram(cache["z"])

    def grad_gram_cached(self, cache):
        z = cache["z"]
        yield from self.grad_seq(z, z)


class LinearKernel(Kernel):
    """k(a, b) = sum_d l_d a_d b_d.

    Equivalent to marginalizing a zero-mean Gaussian prior with per-dimension
    variance l_d over the coefficients of a linear map, so the induced state
    transition is Bayesian linear regression.
    """

    def __init__(self, variances, dim_labels=None):
        self._log_v = np.log(np.asarray(variances, dtype=float))
        d = self._log_v.shape[0]
        labels = dim_labels if dim_labels is not None else [str(i) for i in range(d)]
        self.param_names = tuple(f"l_{s}" for s in labels)
        self._labels = list(labels)

    @property
    def variances(self):
        return np.exp(self._log_v)

    @property
    def log_params(self):
        return self._log_v.copy()

    def with_log_params(self, vec):
        out = LinearKernel(np.ones(len(self._labels)), self._labels)
        out._log_v = np.asarray(vec, dtype=float).copy()
        return out

    def __call__(self, a, b):
        v = np.exp(self._log_v)
        return np.einsum("...nd,...md->...nm", a * v, b)

    def grad_seq(self, a, b):
        v = np.exp(self._log_v)
        for d in range(v.shape[0]):
            # d k / d log l_d = l_d a_d b_d
            yield v[d] * a[..., :, None, d] * b[..., None, :, d]

    def precompute(self, z):
        prods = [z[..., :, None, d] * z[..., None, :, d] for d in range(z.shape[-1])]
        return {"prods": prods}

    def gram_cached(self, cache):
        v = np.exp(self._log_v)
        out = v[0] * cache["prods"][0]
        for d in range(1, v.shape[0]):
            out = out + v[d] * cache["prods"][d]
        return out

    def grad_gram_cached(self, cache):
        v = np.exp(self._log_v)
        for d in range(v.shape[0]):
            yield v[d] * cache["prods"][d]


class SquaredExponentialKernel(Kernel):
    """Anisotropic squared-exponential kernel with one length-scale per
    input dimension and a signal variance."""

    def __init__(self, lengthscales, signal_variance=1.0, dim_labels=None):
        ls = np.atleast_1d(np.asarray(lengthscales, dtype=float))
        self._log = np.concatenate([np.log(ls), [np.log(signal_variance)]])
        d = ls.shape[0]
        if dim_labels is None:
            labels = [""] if d == 1 else [str(i) for i in range(d)]
        else:
            labels = list(dim_labels)
        self.param_names = tuple(f"lambda_{s}" if s else "lambda" for s in labels) \
            + ("sf2",)
        self._labels = labels

    @property
    def lengthscales(self):
        return np.exp(self._log[:-1])

    @property
    def signal_variance(self):
        return float(np.exp(self._log[-1]))

    @property
    def log_params(self):
        return self._log.copy()

    def with_log_params(self, vec):
        out = SquaredExponentialKernel(np.ones(len(self._labels)), 1.0, self._labels)
        out._log = np.asarray(vec, dtype=float).copy()
        return out

    def _scaled_sq(self, d2):
        lam2 = np.exp(2.0 * self._log[:-1])
        return np.sum(d2 / lam2, axis=-1)

    def __call__(self, a, b):
        s = self._scaled_sq(_pairwise_sqdiff(a, b))
        return np.exp(self._log[-1]) * np.exp(-0.5 * s)

    def grad_seq(self, a, b):
        d2 = _pairwise_sqdiff(a, b)
        k = np.exp(self._log[-1]) * np.exp(-0.5 * self._scaled_sq(d2))
        lam2 = np.exp(2.0 * self._log[:-1])
        for d in range(lam2.shape[0]):
            # d k / d log lambda_d = k * (a_d - b_d)^2 / lambda_d^2
            yield k * (d2[..., d] / lam2[d])
        yield k  # d k / d log sf2 = k

    def precompute(self, z):
        d2 = _pairwise_sqdiff(z, z)
        return {"d2": [d2[..., d] for d in range(d2.shape[-1])]}

    def gram_cached(self, cache):
        lam2 = np.exp(2.0 * self._log[:-1])
        s = cache["d2"][0] / lam2[0]
        for d in range(1, lam2.shape[0]):
            s = s + cache["d2"][d] / lam2[d]
        return np.exp(self._log[-1]) * np.exp(-0.5 * s)

    def grad_gram_cached(self, cache):
        k = self.gram_cached(cache)
        lam2 = np.exp(2.0 * self._log[:-1])
        for d in range(lam2.shape[0]):
            yield k * (cache["d2"][d] / lam2[d])
        yield k


class MaternKernel(Kernel):
    """Isotropic Matern kernel of order 3/2 (default) or 5/2 with a single
    length-scale and a signal variance."""

    def __init__(self, lengthscale, signal_variance=1.0, order=3, dim_label=None):
        if order not in (3, 5):
            raise ValueError("Matern order must be 3 (for 3/2) or 5 (for 5/2)")
        self.order = order
        self._log = np.array([np.log(lengthscale), np.log(signal_variance)])
        suffix = f"_{dim_label}" if dim_label else ""
        self._dim_label = dim_label
        self.param_names = (f"lambda{suffix}", "sf2")

    @property
    def lengthscale(self):
        return float(np.exp(self._log[0]))

    @property
    def signal_variance(self):
        return float(np.exp(self._log[1]))

    @property
    def log_params(self):
        return self._log.copy()

    def with_log_params(self, vec):
        out = MaternKernel(1.0, 1.0, self.order, self._dim_label)
        out._log = np.asarray(vec, dtype=float).copy()
        return out

    def _r(self, ssq):
        return np.sqrt(ssq) / np.exp(self._log[0])

    def _value_from_r(self, r):
        sf2 = np.exp(self._log[1])
        if self.order == 3:
            return sf2 * (1.0 + _SQRT3 * r) * np.exp(-_SQRT3 * r)
        return sf2 * (1.0 + _SQRT5 * r + 5.0 * r * r / 3.0) * np.exp(-_SQRT5 * r)

    def _dlog_lam_from_r(self, r):
        # -r * dk/dr, with dk/dr = -3 sf2 r e^{-sqrt3 r} (order 3/2)
        #                        = -(5/3) sf2 r (1 + sqrt5 r) e^{-sqrt5 r} (order 5/2)
        sf2 = np.exp(self._log[1])
        if self.order == 3:
            return 3.0 * sf2 * r * r * np.exp(-_SQRT3 * r)
        return (5.0 / 3.0) * sf2 * r * r * (1.0 + _SQRT5 * r) * np.exp(-_SQRT5 * r)

    def __call__(self, a, b):
        ssq = np.sum(_pairwise_sqdiff(a, b), axis=-1)
        return self._value_from_r(self._r(ssq))

    def grad_seq(self, a, b):
        ssq = np.sum(_pairwise_sqdiff(a, b), axis=-1)
        r = self._r(ssq)
        yield self._dlog_lam_from_r(r)
        yield self._value_from_r(r)  # d k / d log sf2

    def precompute(self, z):
        return {"ssq": np.sum(_pairwise_sqdiff(z, z), axis=-1)}

    def gram_cached(self, cache):
        return self._value_from_r(self._r(cache["ssq"]))

    def grad_gram_cached(self, cache):
        r = self._r(cache["ssq"])
        yield self._dlog_lam_from_r(r)
        yield self._value_from_r(r)


class PinnedKernel(Kernel):
    """Wrapper freezing a subset of another kernel's hyperparameters.

    ``free`` is a boolean mask over the wrapped kernel's parameters; pinned
    entries keep their current value, disappear from ``log_params`` and
    ``param_names``, and yield no gradient terms.  Useful inside products,
    where one shared signal variance is enough.
    """

    def __init__(self, base, free):
        self.base = base
        self.free = np.asarray(free, dtype=bool)
        if self.free.shape[0] != base.n_params:
            raise ValueError("free mask length must match the base kernel")
        self.param_names = tuple(
            n for n, f in zip(base.param_names, self.free) if f)

    @property
    def log_params(self):
        return self.base.log_params[self.free]

    def with_log_params(self, vec):
        full = np.array(self.base.log_params, dtype=float)
        full[self.free] = np.asarray(vec, dtype=float)
        return PinnedKernel(self.base.with_log_params(full), self.free)

    def __call__(self, a, b):
        return self.base(a, b)

    def grad_seq(self, a, b):
        for g, f in zip(self.base.grad_seq(a, b), self.free):
            if f:
                yield g

    def precompute(self, z):
        return self.base.precompute(z)

    def gram_cached(self, cache):
        return self.base.gram_cached(cache)

    def grad_gram_cached(self, cache):
        for g, f in zip(self.base.grad_gram_cached(cache), self.free):
            if f:
                yield g


class ProductKernel(Kernel):
    """Product of child kernels acting on consecutive slices of the input.

    ``blocks`` is a list of (kernel, width) pairs; slice boundaries follow
    from the widths.  The product couples the blocks multiplicatively, so a
    rough direction (e.g. Matern over the state) and a smooth one (squared
    exponential over the control input) can coexist.  Child parameter names
    are prefixed with per-block labels ("x", "u", ... by position unless
    given) to keep them distinct.
    """

    def __init__(self, blocks, block_labels=None):
        self.children = [k for k, _ in blocks]
        self.widths = [w for _, w in blocks]
        if block_labels is None:
            block_labels = [f"b{i}" for i in range(len(self.children))]
        self.block_labels = list(block_labels)
        self.param_names = tuple(
            f"{lbl}_{nm}" for lbl, child in zip(self.block_labels, self.children)
            for nm in child.param_names)

    def _slices(self):
        out, lo = [], 0
        for w in self.widths:
            out.append(slice(lo, lo + w))
            lo += w
        return out

    @property
    def log_params(self):
        return np.concatenate([c.log_params for c in self.children])

    def with_log_params(self, vec):
        vec = np.asarray(vec, dtype=float)
        parts, lo = [], 0
        for c, w in zip(self.children, self.widths):
            parts.append((c.with_log_params(vec[lo:lo + c.n_params]), w))
            lo += c.n_params
        return ProductKernel(parts, self.block_labels)

    def _child_grams(self, a, b):
        return [c(a[..., s], b[..., s]) for c, s in zip(self.children, self._slices())]

    def __call__(self, a, b):
        grams = self._child_grams(a, b)
        out = grams[0]
        for g in grams[1:]:
            out = out * g
        return out

    def grad_seq(self, a, b):
        grams = self._child_grams(a, b)
        for i, (c, s) in enumerate(zip(self.children, self._slices())):
            others = _product_excluding(grams, i)
            for g in c.grad_seq(a[..., s], b[..., s]):
                yield others * g

    def precompute(self, z):
        return {"child": [c.precompute(z[..., s])
                          for c, s in zip(self.children, self._slices())]}

    def gram_cached(self, cache):
        grams = [c.gram_cached(cc) for c, cc in zip(self.children, cache["child"])]
        out = grams[0]
        for g in grams[1:]:
            out = out * g
        return out

    def grad_gram_cached(self, cache):
        grams = [c.gram_cached(cc) for c, cc in zip(self.children, cache["child"])]
        for i, (c, cc) in enumerate(zip(self.children, cache["child"])):
            others = _product_excluding(grams, i)
            for g in c.grad_gram_cached(cc):
                yield others * g


def _product_excluding(grams, i):
    out = None
    for j, g in enumerate(grams):
        if j == i:
            continue
        out = g if out is None else out * g
    return out if out is not None else 1.0


# -- mean functions -------------------------------------------------------


class ZeroMean:
    """m(z) = 0 for every output dimension."""

    def __init__(self, n_out=1):
        self.n_out = n_out

    def __call__(self, z):
        return np.zeros(z.shape[:-1] + (self.n_out,))


class ConstantMean:
    """Fixed constant per output dimension (not learnable)."""

    def __init__(self, values):
        self.values = np.atleast_1d(np.asarray(values, dtype=float))
        self.n_out = self.values.shape[0]

    def __call__(self, z):
        return np.broadcast_to(self.values, z.shape[:-1] + (self.n_out,)).copy()


class LinearMean:
    """m(z) = coeffs @ z with fixed coefficients, shape (n_out, d_in).

    Combined with a vanishing kernel this pins the transition to a known
    linear map, which reduces the whole model to an ordinary linear-Gaussian
    state-space model; that degenerate corner is what the exact-smoother
    cross-checks in the test suite rely on.
    """

    def __init__(self, coeffs):
        self.coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        self.n_out = self.coeffs.shape[0]

    def __call__(self, z):
        return z @ self.coeffs.T
