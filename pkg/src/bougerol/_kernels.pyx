# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-path accumulation loops (the hot kernels).

Each function consumes pre-drawn Gaussian increments shaped
``(n_paths, n_steps)`` and returns per-path scalars, so no full path is ever
materialized.  A numpy implementation with the same signatures lives in
``_kernels_py``; the backend is chosen at import time in ``_backend``.
"""

import numpy as np

from libc.math cimport exp, sqrt, fabs, sinh


def path_stats(double[:, ::1] dw, double step):
    """Per path: endpoint of B, trapezoid of exp(2B), and running max of B."""
    cdef Py_ssize_t n_paths = dw.shape[0]
    cdef Py_ssize_t n_steps = dw.shape[1]
    b_end = np.empty(n_paths)
    a_out = np.empty(n_paths)
    b_max = np.empty(n_paths)
    cdef double[::1] bv = b_end
    cdef double[::1] av = a_out
    cdef double[::1] mv = b_max
    cdef Py_ssize_t i, k
    cdef double b, e, e_prev, acc, mx
    cdef double half_step = 0.5 * step
    with nogil:
        for i in range(n_paths):
            b = 0.0
            e_prev = 1.0
            acc = 0.0
            mx = 0.0
            for k in range(n_steps):
                b = b + dw[i, k]
                e = exp(2.0 * b)
                acc = acc + half_step * (e_prev + e)
                e_prev = e
                if b > mx:
                    mx = b
            bv[i] = b
            av[i] = acc
            mv[i] = mx
    return b_end, a_out, b_max


def em_endpoints(double[:, ::1] dg, double step, double x0):
    """Euler-Maruyama endpoints of dX = sqrt(1+X^2) dG + X/2 dt from X0=x0."""
    cdef Py_ssize_t n_paths = dg.shape[0]
    cdef Py_ssize_t n_steps = dg.shape[1]
    x_end = np.empty(n_paths)
    cdef double[::1] xv = x_end
    cdef Py_ssize_t i, k
    cdef double x
    with nogil:
        for i in range(n_paths):
            x = x0
            for k in range(n_steps):
                x = x + sqrt(1.0 + x * x) * dg[i, k] + 0.5 * x * step
            xv[i] = x
    return x_end


def explicit_stats(double[:, ::1] db, double[:, ::1] dw, double step, double x):
    """Per-path stats of the explicit construction driven by (B, W).

    X_k = exp(-B_k) * (sinh(x) + sum_{j<=k} exp(B_{j-1}) dW_j) with the
    accumulated driver G_k = sum (-X_{j-1} dB_j + dW_j)/sqrt(1+X_{j-1}^2).
    Returns (x_end, g_end, resid_max, g_qv) where resid_max is the grid max
    of |X_k - sinh(x + G_k)| and g_qv the discrete quadratic variation of G.
    """
    cdef Py_ssize_t n_paths = db.shape[0]
    cdef Py_ssize_t n_steps = db.shape[1]
    if dw.shape[0] != n_paths or dw.shape[1] != n_steps:
        raise ValueError("db and dw must have identical shapes")
    x_end = np.empty(n_paths)
    g_end = np.empty(n_paths)
    resid = np.empty(n_paths)
    qv_out = np.empty(n_paths)
    cdef double[::1] xv = x_end
    cdef double[::1] gv = g_end
    cdef double[::1] rv = resid
    cdef double[::1] qv = qv_out
    cdef Py_ssize_t i, k
    cdef double sx = sinh(x)
    cdef double b, ito, xc, g, quad, dgam, r
    with nogil:
        for i in range(n_paths):
            b = 0.0
            ito = 0.0
            xc = sx
            g = 0.0
            quad = 0.0
            r = 0.0
            for k in range(n_steps):
                dgam = (-xc * db[i, k] + dw[i, k]) / sqrt(1.0 + xc * xc)
                g = g + dgam
                quad = quad + dgam * dgam
                ito = ito + exp(b) * dw[i, k]
                b = b + db[i, k]
                xc = exp(-b) * (sx + ito)
                if fabs(xc - sinh(x + g)) > r:
                    r = fabs(xc - sinh(x + g))
            xv[i] = xc
            gv[i] = g
            rv[i] = r
            qv[i] = quad
    return x_end, g_end, resid, qv_out
