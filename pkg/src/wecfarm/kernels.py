"""Low-level numerical kernels shared across the package.

Three families live here: cylinder-wave Bessel functions (J0, J1, Y0),
batched dense complex solves, and the training/inference loops of the
small feed-forward regressors. Each has a vectorized numpy
implementation and, when available, a numba-compiled variant. The
backend is chosen once at import: numba is used when it imports
cleanly, unless the WECFARM_NUMBA environment variable forces a choice
("1" requires numba, "0" forces the numpy path).
"""

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:
    _HAVE_NUMBA = False

_flag = os.environ.get("WECFARM_NUMBA", "").strip().lower()
if _flag in ("0", "off", "false", "no"):
    USE_NUMBA = False
elif _flag in ("1", "on", "true", "yes"):
    if not _HAVE_NUMBA:
        raise ImportError("WECFARM_NUMBA is set but numba is not importable")
    USE_NUMBA = True
else:
    USE_NUMBA = _HAVE_NUMBA


def backend():
    """Name of the active kernel backend, "numba" or "numpy"."""
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# Bessel functions for x > 0.
#
# Power series below the crossover, Hankel asymptotic expansion above it.
# A crossover at 12 keeps the worst absolute error near 2e-12 on
# [0.01, 500]; at the conventional 8 the asymptotic tail is not yet
# converged and the error degrades to a few 1e-9.

_SWITCH = 12.0
_EULER = 0.5772156649015328606


def _j0_small(x):
    q = -0.25 * x * x
    term = 1.0
    s = 1.0
    for k in range(1, 60):
        term *= q / (k * k)
        s += term
        if abs(term) < 1e-18 * abs(s):
            break
    return s


def _j1_small(x):
    q = -0.25 * x * x
    term = 0.5 * x
    s = term
    for k in range(1, 60):
        term *= q / (k * (k + 1))
        s += term
        if abs(term) < 1e-18 * abs(s):
            break
    return s


def _y0_small(x):
    q = 0.25 * x * x
    term = 1.0
    s = 0.0
    h = 0.0
    sign = 1.0
    for k in range(1, 60):
        term *= q / (k * k)
        h += 1.0 / k
        s += sign * term * h
        sign = -sign
        if term * h < 1e-18 * abs(s):
            break
    return (2.0 / np.pi) * ((np.log(0.5 * x) + _EULER) * _j0_small(x) + s)


def _pq_large(x, mu):
    # P and Q of the Hankel expansion, truncated at the smallest term.
    p = 1.0
    q = 0.0
    a = 1.0
    prev = 1e308
    eightx = 8.0 * x
    for m in range(1, 40):
        a *= (mu - (2.0 * m - 1.0) ** 2) / (m * eightx)
        t = abs(a)
        if t >= prev:
            break
        if m % 2 == 1:
            q += a if (m // 2) % 2 == 0 else -a
        else:
            p += a if (m // 2) % 2 == 0 else -a
        prev = t
    return p, q


def _j0_scalar(x):
    if x < _SWITCH:
        return _j0_small(x)
    p, q = _pq_large(x, 0.0)
    chi = x - 0.25 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _j1_scalar(x):
    if x < _SWITCH:
        return _j1_small(x)
    p, q = _pq_large(x, 4.0)
    chi = x - 0.75 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _y0_scalar(x):
    if x < _SWITCH:
        return _y0_small(x)
    p, q = _pq_large(x, 0.0)
    chi = x - 0.25 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.sin(chi) + q * np.cos(chi))


def _j0_1d_py(x):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        out[i] = _j0_scalar(x[i])
    return out


def _j1_1d_py(x):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        out[i] = _j1_scalar(x[i])
    return out


def _y0_1d_py(x):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        out[i] = _y0_scalar(x[i])
    return out


def _series_sums_np(x):
    # Vectorized small-argument series for j0, j1 and the y0 partial sum.
    q = -0.25 * x * x
    t0 = np.ones_like(x)
    s0 = np.ones_like(x)
    t1 = 0.5 * x
    s1 = t1.copy()
    ty = np.ones_like(x)
    sy = np.zeros_like(x)
    h = 0.0
    sign = 1.0
    for k in range(1, 60):
        t0 = t0 * (q / (k * k))
        s0 += t0
        t1 = t1 * (q / (k * (k + 1)))
        s1 += t1
        ty = ty * (-q / (k * k))
        h += 1.0 / k
        sy += sign * ty * h
        sign = -sign
    return s0, s1, sy


def _pq_large_np(x, mu):
    p = np.ones_like(x)
    q = np.zeros_like(x)
    a = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    live = np.ones(x.shape, dtype=bool)
    eightx = 8.0 * x
    for m in range(1, 40):
        a = a * ((mu - (2.0 * m - 1.0) ** 2) / (m * eightx))
        t = np.abs(a)
        live &= t < prev
        if not live.any():
            break
        contrib = np.where(live, a, 0.0)
        sgn = 1.0 if (m // 2) % 2 == 0 else -1.0
        if m % 2 == 1:
            q += sgn * contrib
        else:
            p += sgn * contrib
        prev = t
    return p, q


def _bessel_1d_np(x, which):
    out = np.empty_like(x)
    small = x < _SWITCH
    if small.any():
        xs = x[small]
        s0, s1, sy = _series_sums_np(xs)
        if which == 0:
            out[small] = s0
        elif which == 1:
            out[small] = s1
        else:
            out[small] = (2.0 / np.pi) * ((np.log(0.5 * xs) + _EULER) * s0 + sy)
    big = ~small
    if big.any():
        xb = x[big]
        amp = np.sqrt(2.0 / (np.pi * xb))
        if which == 1:
            p, q = _pq_large_np(xb, 4.0)
            chi = xb - 0.75 * np.pi
            out[big] = amp * (p * np.cos(chi) - q * np.sin(chi))
        else:
            p, q = _pq_large_np(xb, 0.0)
            chi = xb - 0.25 * np.pi
            if which == 0:
                out[big] = amp * (p * np.cos(chi) - q * np.sin(chi))
            else:
                out[big] = amp * (p * np.sin(chi) + q * np.cos(chi))
    return out


def _j0_1d_np(x):
    return _bessel_1d_np(x, 0)


def _j1_1d_np(x):
    return _bessel_1d_np(x, 1)


def _y0_1d_np(x):
    return _bessel_1d_np(x, 2)


# ---------------------------------------------------------------------------
# Batched dense complex solves: K independent N-by-N systems.


def _solve_batch_np(a, b):
    return np.linalg.solve(a, b[:, :, None])[:, :, 0]


def _solve_batch_loop(a, b):
    out = np.empty_like(b)
    for k in range(b.shape[0]):
        out[k] = np.linalg.solve(a[k], b[k])
    return out


# ---------------------------------------------------------------------------
# Two-hidden-layer tanh regressors. The caller supplies the initialized
# weights, the minibatch index schedule and the learning rate; training
# mutates the weight arrays in place and returns the final full-set MSE
# in scaled units. Keeping the schedule outside the kernel makes runs
# reproducible independently of the backend.


def _mlp_forward_impl(x, w1, b1, w2, b2, w3, b3):
    h1 = np.tanh(x @ w1 + b1)
    h2 = np.tanh(h1 @ w2 + b2)
    return h2 @ w3 + b3


def _mlp_train_impl(x, y, w1, b1, w2, b2, w3, b3, batches, lr, use_adam):
    mw1 = np.zeros_like(w1)
    vw1 = np.zeros_like(w1)
    mb1 = np.zeros_like(b1)
    vb1 = np.zeros_like(b1)
    mw2 = np.zeros_like(w2)
    vw2 = np.zeros_like(w2)
    mb2 = np.zeros_like(b2)
    vb2 = np.zeros_like(b2)
    mw3 = np.zeros_like(w3)
    vw3 = np.zeros_like(w3)
    mb3 = np.zeros_like(b3)
    vb3 = np.zeros_like(b3)
    beta1 = 0.9
    beta2 = 0.999
    eps = 1e-8
    c1 = 1.0
    c2 = 1.0
    for step in range(batches.shape[0]):
        idx = batches[step]
        xb = x[idx]
        yb = y[idx]
        h1 = np.tanh(xb @ w1 + b1)
        h2 = np.tanh(h1 @ w2 + b2)
        out = h2 @ w3 + b3
        d3 = (2.0 / (yb.shape[0] * yb.shape[1])) * (out - yb)
        gw3 = h2.T @ d3
        gb3 = np.sum(d3, axis=0)
        d2 = (d3 @ w3.T) * (1.0 - h2 * h2)
        gw2 = h1.T @ d2
        gb2 = np.sum(d2, axis=0)
        d1 = (d2 @ w2.T) * (1.0 - h1 * h1)
        gw1 = xb.T @ d1
        gb1 = np.sum(d1, axis=0)
        if use_adam:
            c1 *= beta1
            c2 *= beta2
            k1 = 1.0 - c1
            k2 = 1.0 - c2
            mw1 = beta1 * mw1 + (1.0 - beta1) * gw1
            vw1 = beta2 * vw1 + (1.0 - beta2) * gw1 * gw1
            w1 -= lr * (mw1 / k1) / (np.sqrt(vw1 / k2) + eps)
            mb1 = beta1 * mb1 + (1.0 - beta1) * gb1
            vb1 = beta2 * vb1 + (1.0 - beta2) * gb1 * gb1
            b1 -= lr * (mb1 / k1) / (np.sqrt(vb1 / k2) + eps)
            mw2 = beta1 * mw2 + (1.0 - beta1) * gw2
            vw2 = beta2 * vw2 + (1.0 - beta2) * gw2 * gw2
            w2 -= lr * (mw2 / k1) / (np.sqrt(vw2 / k2) + eps)
            mb2 = beta1 * mb2 + (1.0 - beta1) * gb2
            vb2 = beta2 * vb2 + (1.0 - beta2) * gb2 * gb2
            b2 -= lr * (mb2 / k1) / (np.sqrt(vb2 / k2) + eps)
            mw3 = beta1 * mw3 + (1.0 - beta1) * gw3
            vw3 = beta2 * vw3 + (1.0 - beta2) * gw3 * gw3
            w3 -= lr * (mw3 / k1) / (np.sqrt(vw3 / k2) + eps)
            mb3 = beta1 * mb3 + (1.0 - beta1) * gb3
            vb3 = beta2 * vb3 + (1.0 - beta2) * gb3 * gb3
            b3 -= lr * (mb3 / k1) / (np.sqrt(vb3 / k2) + eps)
        else:
            w1 -= lr * gw1
            b1 -= lr * gb1
            w2 -= lr * gw2
            b2 -= lr * gb2
            w3 -= lr * gw3
            b3 -= lr * gb3
    h1 = np.tanh(x @ w1 + b1)
    h2 = np.tanh(h1 @ w2 + b2)
    out = h2 @ w3 + b3
    diff = out - y
    return np.sum(diff * diff) / (y.shape[0] * y.shape[1])


if USE_NUMBA:
    _j0_small = njit(cache=True)(_j0_small)
    _j1_small = njit(cache=True)(_j1_small)
    _y0_small = njit(cache=True)(_y0_small)
    _pq_large = njit(cache=True)(_pq_large)
    _j0_scalar = njit(cache=True)(_j0_scalar)
    _j1_scalar = njit(cache=True)(_j1_scalar)
    _y0_scalar = njit(cache=True)(_y0_scalar)
    _j0_1d = njit(cache=True)(_j0_1d_py)
    _j1_1d = njit(cache=True)(_j1_1d_py)
    _y0_1d = njit(cache=True)(_y0_1d_py)
    _solve_batch = njit(cache=True)(_solve_batch_loop)
    _mlp_forward = njit(cache=True)(_mlp_forward_impl)
    _mlp_train = njit(cache=True)(_mlp_train_impl)
else:
    _j0_1d = _j0_1d_np
    _j1_1d = _j1_1d_np
    _y0_1d = _y0_1d_np
    _solve_batch = _solve_batch_np
    _mlp_forward = _mlp_forward_impl
    _mlp_train = _mlp_train_impl


def _dispatch_bessel(fn, x):
    arr = np.ascontiguousarray(x, dtype=np.float64).ravel()
    res = fn(arr)
    if np.ndim(x) == 0:
        return float(res[0])
    return res.reshape(np.shape(x))


def j0(x):
    """Bessel J0 for positive real x, scalar or array."""
    return _dispatch_bessel(_j0_1d, x)


def j1(x):
    """Bessel J1 for positive real x, scalar or array."""
    return _dispatch_bessel(_j1_1d, x)


def y0(x):
    """Bessel Y0 for positive real x, scalar or array."""
    return _dispatch_bessel(_y0_1d, x)


def solve_batch(a, b):
    """Solve a[k] @ x[k] = b[k] for a stack of small complex systems.

    Parameters
    ----------
    a : (K, N, N) complex array
    b : (K, N) complex array

    Returns
    -------
    (K, N) complex array of solutions.
    """
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    return _solve_batch(a, b)


def mlp_forward(x, weights):
    """Evaluate a two-hidden-layer tanh network on scaled inputs."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    w1, b1, w2, b2, w3, b3 = weights
    return _mlp_forward(x, w1, b1, w2, b2, w3, b3)


def mlp_train(x, y, weights, batches, lr, use_adam=True):
    """Train the network in place on a fixed minibatch schedule.

    `batches` is an integer array of shape (steps, batch_size) holding
    row indices into x and y. Returns the final mean-squared error over
    the full set, in scaled units.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    batches = np.ascontiguousarray(batches, dtype=np.int64)
    w1, b1, w2, b2, w3, b3 = weights
    return _mlp_train(x, y, w1, b1, w2, b2, w3, b3, batches, float(lr), bool(use_adam))


# Explicit numpy-path entry points, mainly for the backend benchmark and
# for cross-checking the compiled variants in tests.


def j0_numpy(x):
    return _dispatch_bessel(_j0_1d_np, x)


def j1_numpy(x):
    return _dispatch_bessel(_j1_1d_np, x)


def y0_numpy(x):
    return _dispatch_bessel(_y0_1d_np, x)


def solve_batch_numpy(a, b):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    return _solve_batch_np(a, b)


def mlp_forward_numpy(x, weights):
    x = np.ascontiguousarray(x, dtype=np.float64)
    w1, b1, w2, b2, w3, b3 = weights
    return _mlp_forward_impl(x, w1, b1, w2, b2, w3, b3)


def mlp_train_numpy(x, y, weights, batches, lr, use_adam=True):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    batches = np.ascontiguousarray(batches, dtype=np.int64)
    w1, b1, w2, b2, w3, b3 = weights
    return _mlp_train_impl(x, y, w1, b1, w2, b2, w3, b3, batches, float(lr), bool(use_adam))
