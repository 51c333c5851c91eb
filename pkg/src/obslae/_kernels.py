"""Compiled inner loops.

Every reduction here accumulates strictly left to right with one rounding per
multiply and one per add, so iteration counts do not depend on BLAS blocking or
on fused multiply-add contraction.
"""
import numba
import numpy as np

_jit = numba.njit(cache=True, fastmath=False, nogil=True)


@_jit
def matmul(a, b):
    n, inner = a.shape
    m = b.shape[1]
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(inner):
                s += a[i, t] * b[t, j]
            out[i, j] = s
    return out


@_jit
def matvec(a, x):
    n, inner = a.shape
    out = np.empty(n)
    for i in range(n):
        s = 0.0
        for t in range(inner):
            s += a[i, t] * x[t]
        out[i] = s
    return out


@_jit
def dot(x, y):
    s = 0.0
    for i in range(x.shape[0]):
        s += x[i] * y[i]
    return s


@_jit
def sum_squares(a):
    flat = a.ravel()
    s = 0.0
    for i in range(flat.shape[0]):
        s += flat[i] * flat[i]
    return s


@_jit
def diff_norm(x, y):
    s = 0.0
    for i in range(x.shape[0]):
        d = x[i] - y[i]
        s += d * d
    return np.sqrt(s)


@_jit
def residual_norm(g, y, u):
    s = 0.0
    for i in range(g.shape[0]):
        acc = 0.0
        for t in range(g.shape[1]):
            acc += g[i, t] * u[t]
        d = y[i] - acc
        s += d * d
    return np.sqrt(s)


@_jit
def affine_step(m, c, u):
    """Return m @ u + c."""
    n = m.shape[0]
    out = np.empty(n)
    for i in range(n):
        s = 0.0
        for t in range(m.shape[1]):
            s += m[i, t] * u[t]
        out[i] = s + c[i]
    return out


# Status codes returned by ``iterate``.
CONVERGED = 0
MAX_ITERS = 1
NON_FINITE = 2


@_jit
def iterate(m, c, g, y, u0, eps, max_iters, record):
    """Run u <- m @ u + c until the step norm drops below ``eps``.

    Returns (u, k, status, last_step, steps, residuals); the trace arrays have
    length k when ``record`` is set and length 0 otherwise.
    """
    n_trace = max_iters if record else 0
    steps = np.empty(n_trace)
    residuals = np.empty(n_trace)
    u = u0.copy()
    k = 0
    last_step = np.inf
    status = MAX_ITERS
    while k < max_iters:
        nxt = affine_step(m, c, u)
        k += 1
        finite = True
        for i in range(nxt.shape[0]):
            if not np.isfinite(nxt[i]):
                finite = False
                break
        if not finite:
            u = nxt
            status = NON_FINITE
            break
        last_step = diff_norm(nxt, u)
        u = nxt
        if record:
            steps[k - 1] = last_step
            residuals[k - 1] = residual_norm(g, y, u)
        if last_step < eps:
            status = CONVERGED
            break
    if record:
        return u, k, status, last_step, steps[:k].copy(), residuals[:k].copy()
    return u, k, status, last_step, steps, residuals
