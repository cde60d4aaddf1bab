"""Numpy fallback for the compiled kernels in ``_kernels.pyx``.

Same signatures and semantics; vectorized across paths.  Endpoint sums are
bit-identical to the compiled loops (sequential accumulation); quantities
involving ``exp`` may differ from the compiled versions in the last few ulps
because numpy's SIMD ``exp`` and libm round differently.
"""

from __future__ import annotations

import numpy as np


def _as_matrix(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D increment array, got ndim={a.ndim}")
    return a


def path_stats(dw: np.ndarray, step: float):
    """Per path: endpoint of B, trapezoid of exp(2B), and running max of B."""
    dw = _as_matrix(dw)
    b = np.cumsum(dw, axis=1)
    e = np.exp(2.0 * b)
    # trapezoid with the implicit leading node B_0 = 0, exp(2*0) = 1
    a = step * (0.5 + np.sum(e[:, :-1], axis=1) + 0.5 * e[:, -1])
    b_max = np.maximum(b.max(axis=1), 0.0)
    return b[:, -1].copy(), a, b_max


def em_endpoints(dg: np.ndarray, step: float, x0: float):
    """Euler-Maruyama endpoints of dX = sqrt(1+X^2) dG + X/2 dt from X0=x0."""
    dg = _as_matrix(dg)
    x = np.full(dg.shape[0], float(x0))
    for k in range(dg.shape[1]):
        x = x + np.sqrt(1.0 + x * x) * dg[:, k] + 0.5 * x * step
    return x


def explicit_stats(db: np.ndarray, dw: np.ndarray, step: float, x: float):
    """Per-path stats of the explicit construction; see ``_kernels.pyx``."""
    db = _as_matrix(db)
    dw = _as_matrix(dw)
    if db.shape != dw.shape:
        raise ValueError("db and dw must have identical shapes")
    n_paths, n_steps = db.shape
    sx = np.sinh(float(x))
    b = np.zeros(n_paths)
    ito = np.zeros(n_paths)
    xc = np.full(n_paths, sx)
    g = np.zeros(n_paths)
    qv = np.zeros(n_paths)
    resid = np.zeros(n_paths)
    for k in range(n_steps):
        dgam = (-xc * db[:, k] + dw[:, k]) / np.sqrt(1.0 + xc * xc)
        g += dgam
        qv += dgam * dgam
        ito += np.exp(b) * dw[:, k]
        b += db[:, k]
        xc = np.exp(-b) * (sx + ito)
        np.maximum(resid, np.abs(xc - np.sinh(x + g)), out=resid)
    return xc, g, resid, qv
