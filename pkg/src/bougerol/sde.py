"""The hyperbolic-sine SDE and its explicit construction.

The process X_t = exp(-B_t) sinh(x) + exp(-B_t) * int_0^t exp(B_s) dW_s,
driven by independent Brownian motions B and W, satisfies

    dX = sqrt(1 + X^2) dG + X/2 dt,   X_0 = sinh(x),

where G accumulates (-X dB + dW)/sqrt(1 + X^2) and is itself a standard
Brownian motion; the strong solution is sinh(x + G_t).  Simulating both
representations on shared noise yields self-converging residuals, and the
Euler-Maruyama scheme against the closed form exhibits the usual strong
order 1/2.  Comparing the explicit construction with its time-changed form
recovers the drifted one-dimensional identity, checked here by KS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .functionals import CHUNK_PATHS, sample_functionals
from .paths import GridSpec
from .rng import RngStream
from .stats import TestReport, from_stream, ks_two_sample


@dataclass(frozen=True)
class SdeRunConfig:
    """Initial hyperbolic coordinate plus grids for both simulations."""

    x: float
    grid: GridSpec
    scheme_steps: int | None = None  # Euler-Maruyama resolution; grid's by default

    def __post_init__(self):
        if self.scheme_steps is not None and self.scheme_steps < 1:
            raise ValueError(f"scheme_steps must be >= 1, got {self.scheme_steps}")

    @property
    def em_steps(self) -> int:
        return self.grid.n_steps if self.scheme_steps is None else self.scheme_steps


@dataclass(frozen=True, eq=False)
class ExplicitPathResult:
    """Explicit-construction path with its accumulated driver."""

    config: SdeRunConfig
    x_path: np.ndarray = field(repr=False)
    gamma_path: np.ndarray = field(repr=False)

    @property
    def gamma_end(self) -> float:
        return float(self.gamma_path[-1])

    @property
    def residual_max(self) -> float:
        """Grid max of |X_k - sinh(x + G_k)|, the pathwise-identity residual."""
        return float(
            np.abs(self.x_path - np.sinh(self.config.x + self.gamma_path)).max()
        )

    @property
    def gamma_quadratic_variation(self) -> float:
        d = np.diff(self.gamma_path)
        return float(d @ d)


def explicit_from_increments(
    x: float, db: np.ndarray, dw: np.ndarray, step: float
) -> tuple[np.ndarray, np.ndarray]:
    """Explicit construction along given increment vectors.

    Returns ``(x_path, gamma_path)`` of length ``len(db) + 1``.  The Ito
    integral uses left-point sums; the driver increment at step k uses the
    state at k-1.
    """
    db = np.asarray(db, dtype=np.float64)
    dw = np.asarray(dw, dtype=np.float64)
    if db.shape != dw.shape or db.ndim != 1:
        raise ValueError("db and dw must be equal-length 1-D arrays")
    n = db.shape[0]
    sx = math.sinh(x)
    b = np.cumsum(db)
    exp_b_prev = np.empty(n)
    exp_b_prev[0] = 1.0
    np.exp(b[:-1], out=exp_b_prev[1:])
    ito = np.cumsum(exp_b_prev * dw)
    x_path = np.empty(n + 1)
    x_path[0] = sx
    x_path[1:] = np.exp(-b) * (sx + ito)
    x_prev = x_path[:-1]
    dgam = (-x_prev * db + dw) / np.sqrt(1.0 + x_prev * x_prev)
    gamma_path = np.empty(n + 1)
    gamma_path[0] = 0.0
    np.cumsum(dgam, out=gamma_path[1:])
    return x_path, gamma_path


def simulate_X_explicit(cfg: SdeRunConfig, rng: RngStream) -> ExplicitPathResult:
    """Simulate the explicit construction on fresh (B, W) noise."""
    n = cfg.grid.n_steps
    z = rng.generator().standard_normal((2, n))
    sqrt_h = math.sqrt(cfg.grid.step)
    x_path, gamma_path = explicit_from_increments(
        cfg.x, z[0] * sqrt_h, z[1] * sqrt_h, cfg.grid.step
    )
    return ExplicitPathResult(cfg, x_path, gamma_path)


def em_path_from_increments(x: float, dg: np.ndarray, step: float) -> np.ndarray:
    """Euler-Maruyama path of the SDE along given driver increments."""
    dg = np.asarray(dg, dtype=np.float64)
    out = np.empty(dg.shape[0] + 1)
    out[0] = math.sinh(x)
    cur = out[0]
    for k, inc in enumerate(dg):
        cur = cur + math.sqrt(1.0 + cur * cur) * inc + 0.5 * cur * step
        out[k + 1] = cur
    return out


def simulate_X_em(cfg: SdeRunConfig, rng: RngStream) -> float:
    """Endpoint of the Euler-Maruyama scheme on a fresh driver."""
    n = cfg.em_steps
    step = cfg.grid.t_end / n
    dg = rng.generator().standard_normal((1, n)) * math.sqrt(step)
    return float(kernels.em_endpoints(dg, step, math.sinh(cfg.x))[0])


def sample_em_endpoints(
    t: float, x: float, n_mc: int, scheme_steps: int, rng: RngStream
) -> np.ndarray:
    """``n_mc`` independent Euler-Maruyama endpoints, chunked like the
    functional sampler so results never depend on worker layout."""
    step = t / scheme_steps
    sqrt_h = math.sqrt(step)
    sx = math.sinh(x)
    out = np.empty(n_mc)
    for i in range(0, (n_mc + CHUNK_PATHS - 1) // CHUNK_PATHS):
        lo = i * CHUNK_PATHS
        rows = min(CHUNK_PATHS, n_mc - lo)
        dg = rng.child(i).generator().standard_normal((rows, scheme_steps))
        dg *= sqrt_h
        out[lo : lo + rows] = kernels.em_endpoints(dg, step, sx)
    return out


@dataclass(frozen=True)
class ConvergenceResult:
    """RMS errors across step counts with fitted convergence order."""

    step_counts: tuple[int, ...]
    rms: tuple[float, ...]
    order: float  # least-squares slope of log error against log step size

    @property
    def pairwise_orders(self) -> tuple[float, ...]:
        out = []
        for (n0, e0), (n1, e1) in zip(
            zip(self.step_counts, self.rms), zip(self.step_counts[1:], self.rms[1:])
        ):
            out.append(math.log(e0 / e1) / math.log(n1 / n0))
        return tuple(out)


def _fit_order(step_counts, rms) -> float:
    log_h = np.log(1.0 / np.asarray(step_counts, dtype=float))
    log_e = np.log(np.asarray(rms))
    slope = np.polyfit(log_h, log_e, 1)[0]
    return float(slope)


def em_strong_error(
    t: float,
    x: float,
    n_paths: int,
    step_counts: tuple[int, ...],
    rng: RngStream,
) -> ConvergenceResult:
    """Strong error of Euler-Maruyama against sinh(x + G_t) on shared noise.

    Fine increments at the largest step count are aggregated onto each
    coarser grid, so every level sees the same driver path; the exact
    endpoint depends only on G_t and is common to all levels.
    """
    counts = sorted(step_counts)
    fine = counts[-1]
    for c in counts:
        if fine % c:
            raise ValueError(f"step counts must divide the finest ({fine}), got {c}")
    sq_sums = {c: 0.0 for c in counts}
    sx = math.sinh(x)
    done = 0
    chunk_idx = 0
    while done < n_paths:
        rows = min(CHUNK_PATHS, n_paths - done)
        dz = rng.child(chunk_idx).generator().standard_normal((rows, fine))
        dz *= math.sqrt(t / fine)
        exact = np.sinh(x + dz.sum(axis=1))
        for c in counts:
            dg = dz.reshape(rows, c, fine // c).sum(axis=2)
            ends = kernels.em_endpoints(np.ascontiguousarray(dg), t / c, sx)
            err = ends - exact
            sq_sums[c] += float(err @ err)
        done += rows
        chunk_idx += 1
    rms = tuple(math.sqrt(sq_sums[c] / n_paths) for c in counts)
    return ConvergenceResult(tuple(counts), rms, _fit_order(counts, rms))


def explicit_residual_convergence(
    t: float,
    x: float,
    n_paths: int,
    step_counts: tuple[int, ...],
    rng: RngStream,
) -> ConvergenceResult:
    """Self-convergence of the pathwise identity residual under refinement.

    For each level the shared fine (B, W) increments are aggregated and the
    RMS over paths of the grid-max residual |X - sinh(x + G)| is recorded.
    """
    counts = sorted(step_counts)
    fine = counts[-1]
    for c in counts:
        if fine % c:
            raise ValueError(f"step counts must divide the finest ({fine}), got {c}")
    sq_sums = {c: 0.0 for c in counts}
    done = 0
    chunk_idx = 0
    while done < n_paths:
        rows = min(CHUNK_PATHS, n_paths - done)
        gen = rng.child(chunk_idx).generator()
        scale = math.sqrt(t / fine)
        db = gen.standard_normal((rows, fine)) * scale
        dw = gen.standard_normal((rows, fine)) * scale
        for c in counts:
            db_c = np.ascontiguousarray(db.reshape(rows, c, fine // c).sum(axis=2))
            dw_c = np.ascontiguousarray(dw.reshape(rows, c, fine // c).sum(axis=2))
            resid = kernels.explicit_stats(db_c, dw_c, t / c, x)[2]
            sq_sums[c] += float(resid @ resid)
        done += rows
        chunk_idx += 1
    rms = tuple(math.sqrt(sq_sums[c] / n_paths) for c in counts)
    return ConvergenceResult(tuple(counts), rms, _fit_order(counts, rms))


def conditional_beta_endpoints(a_t: np.ndarray, rng: RngStream) -> np.ndarray:
    """beta evaluated at the path functionals via the exact conditional law
    beta_{A} | B ~ N(0, A)."""
    z = rng.generator().standard_normal(a_t.shape[0])
    return np.sqrt(a_t) * z


def full_path_beta_endpoints(
    a_t: np.ndarray, rng: RngStream, n_sub: int = 256
) -> np.ndarray:
    """beta_{A} by summing a simulated path over [0, A]; diagnostic twin of
    :func:`conditional_beta_endpoints` (agrees in law, not pathwise)."""
    z = rng.generator().standard_normal((a_t.shape[0], n_sub))
    return np.sqrt(a_t / n_sub) * z.sum(axis=1)


def bougerol_drift_check(
    t: float,
    x: float,
    n_mc: int,
    rng: RngStream,
    n_steps: int = 4096,
    alpha: float = 0.01,
) -> TestReport:
    """KS check of exp(B_t) sinh(x) + beta_{A_t} against sinh(x + B_t)."""
    if n_mc < 2:
        raise ValueError(f"n_mc must be >= 2, got {n_mc}")
    batch = sample_functionals(t, n_mc, rng.child(0), n_steps=n_steps)
    beta = conditional_beta_endpoints(batch.a_t, rng.child(1))
    lhs = batch.exp_b * math.sinh(x) + beta
    rhs = np.sinh(x + math.sqrt(t) * rng.child(2).generator().standard_normal(n_mc))
    report = ks_two_sample(
        from_stream(lhs, "exp_b_sinh_x_plus_beta", rng.child(0)),
        from_stream(rhs, "sinh_x_plus_B", rng.child(2)),
        alpha,
    )
    meta = {
        "t": t,
        "x": x,
        "n_mc": n_mc,
        "n_steps": n_steps,
        "seed": rng.seed,
        "stream_id": rng.stream_id,
        "n_rejected": batch.n_rejected,
    }
    return TestReport(
        "sde:drift_identity:" + report.test_name,
        report.statistic,
        report.threshold_or_pvalue,
        report.n1,
        report.n2,
        report.verdict,
        {**report.metadata, **meta},
    )
