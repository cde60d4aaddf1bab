"""Closed-form distributional quantities for the identity checks.

Everything here is analytic: the oscillatory-integral density of the
exponential functional A_t, its Mellin relation, the joint CDFs of a
Brownian endpoint with a level local time, the corresponding joint density,
and the hyperbolic-transformed CDF appearing on the analytic side of the
main two-dimensional identity.

All probabilities are compositions of the standard normal CDF, which is
evaluated through the complementary error function in double precision
(relative error near 1e-15), so the accuracy budget of every formula starts
at machine level and is dominated by quadrature where quadrature appears.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn
from scipy.special import ndtr, ndtri

from .functionals import sample_functionals
from .rng import RngStream

# Below this horizon the density prefactor exp(pi^2/(8t)) explodes while the
# oscillatory expectation shrinks, and double-precision quadrature loses
# digits; evaluations are flagged, not refused.
SMALL_T_FLOOR = 0.25

# exp underflows to 0.0 past -746; used to cut the integration domain where
# the cosh^2/(2v) factor kills the integrand exactly.
_EXP_UNDERFLOW = 746.0


def normal_cdf(x):
    """Standard normal CDF Phi; accepts scalars or arrays."""
    return ndtr(x)


def normal_quantile(p):
    """Inverse of :func:`normal_cdf`."""
    return ndtri(p)


@dataclass(frozen=True)
class DensityEval:
    """Quadrature value with its error estimate and accuracy flags."""

    value: float
    abs_error_estimate: float
    nodes_used: int
    flags: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.flags


def _check_density_args(t: float, tol: float) -> list[str]:
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    return ["small_t_unstable"] if t < SMALL_T_FLOOR else []


def _oscillation_breakpoints(t: float, b_hi: float) -> list[float]:
    # Panel boundaries at half-periods of cos(pi*b/(2t)): period 4t in b.
    # Each Gauss-Kronrod panel then carries >= 21 nodes per half-period.
    return list(np.arange(2.0 * t, b_hi, 2.0 * t))


def _quad(f, lo, hi, epsabs, points):
    res = integrate.quad(
        f,
        lo,
        hi,
        points=points or None,
        limit=max(200, 4 * len(points) + 50),
        epsabs=epsabs,
        epsrel=1e-12,
        full_output=True,
    )
    value, abserr, info = res[0], res[1], res[2]
    warned = len(res) > 3
    return value, abserr, int(info["neval"]), warned


def density_A(t: float, v: float, tol: float = 1e-9) -> DensityEval:
    """Density of A_t at ``v > 0``.

    Evaluates exp(pi^2/(8t)) * E[cosh(B_t)/sqrt(2 pi v^3)
    * exp(-cosh(B_t)^2/(2v)) * cos(pi B_t/(2t))] by adaptive Gauss-Kronrod
    quadrature over the N(0, t) law of B_t, with panel boundaries forced at
    half-periods of the oscillating factor.  The domain is cut where the
    Gaussian weight or the exp(-cosh^2/(2v)) factor underflows, which leaves
    no representable truncation error.

    ``abs_error_estimate`` exceeding ``tol`` raises the ``tol_not_met`` flag;
    horizons below ``SMALL_T_FLOOR`` carry ``small_t_unstable``.
    """
    flags = _check_density_args(t, tol)
    if v <= 0:
        raise ValueError(f"v must be > 0, got {v}")
    prefactor = math.exp(math.pi**2 / (8.0 * t)) / math.sqrt(2.0 * math.pi * v**3)
    cosh_cut = math.sqrt(2.0 * v * _EXP_UNDERFLOW)
    b_cosh = math.acosh(cosh_cut) if cosh_cut > 1.0 else 0.0
    b_hi = min(10.0 * math.sqrt(t), b_cosh)
    if b_hi <= 0.0:
        # exp(-cosh^2/(2v)) underflows already at b = 0
        return DensityEval(0.0, 0.0, 0, tuple(flags))

    inv_2v = 0.5 / v
    omega = math.pi / (2.0 * t)
    norm = 1.0 / math.sqrt(2.0 * math.pi * t)
    inv_2t = 0.5 / t

    def integrand(b: float) -> float:
        c = math.cosh(b)
        return (
            norm
            * math.exp(-b * b * inv_2t - c * c * inv_2v)
            * c
            * math.cos(omega * b)
        )

    # integrand is even in b: integrate the half-line and double
    value, abserr, neval, warned = _quad(
        integrand, 0.0, b_hi, tol / (2.0 * prefactor), _oscillation_breakpoints(t, b_hi)
    )
    value *= 2.0 * prefactor
    abserr *= 2.0 * prefactor
    if warned:
        flags.append("quadrature_warning")
    if abserr > tol:
        flags.append("tol_not_met")
    return DensityEval(value, abserr, neval, tuple(flags))


def density_A_interval(t: float, v_lo: float, v_hi: float, tol: float = 1e-9) -> DensityEval:
    """Mass P(v_lo < A_t <= v_hi) by one quadrature.

    The inner v-integral of the density has the closed form
    2[Phi(-cosh b/sqrt(v_hi)) - Phi(-cosh b/sqrt(v_lo))], so only the outer
    expectation over B_t needs quadrature.  Used for histogram bin masses.
    """
    flags = _check_density_args(t, tol)
    if not (0 <= v_lo < v_hi):
        raise ValueError(f"need 0 <= v_lo < v_hi, got ({v_lo}, {v_hi})")
    prefactor = math.exp(math.pi**2 / (8.0 * t))
    b_hi = 12.0 * math.sqrt(t)
    omega = math.pi / (2.0 * t)
    norm = 1.0 / math.sqrt(2.0 * math.pi * t)
    inv_2t = 0.5 / t
    s_lo = 1.0 / math.sqrt(v_lo) if v_lo > 0 else math.inf
    s_hi = 1.0 / math.sqrt(v_hi)

    def integrand(b: float) -> float:
        c = math.cosh(b)
        lo_term = float(ndtr(-c * s_lo)) if v_lo > 0 else 0.0
        mass = float(ndtr(-c * s_hi)) - lo_term
        return norm * math.exp(-b * b * inv_2t) * math.cos(omega * b) * 2.0 * mass

    value, abserr, neval, warned = _quad(
        integrand, 0.0, b_hi, tol / (2.0 * prefactor), _oscillation_breakpoints(t, b_hi)
    )
    value *= 2.0 * prefactor
    abserr *= 2.0 * prefactor
    if warned:
        flags.append("quadrature_warning")
    if abserr > tol:
        flags.append("tol_not_met")
    return DensityEval(value, abserr, neval, tuple(flags))


@dataclass(frozen=True)
class MellinCheck:
    """Monte Carlo lhs vs quadrature rhs of the fractional-moment relation."""

    nu: float
    t: float
    lhs: float
    rhs: float
    mc_se: float
    n_mc: int


def _log_sinh(b: float) -> float:
    """log(sinh b) for b > 0 without overflow."""
    if b > 20.0:
        return b - math.log(2.0) + math.log1p(-math.exp(-2.0 * b))
    return math.log(math.sinh(b))


def _abs_sinh_moment(t: float, power: float) -> float:
    """E|sinh B_t|^power for power > -1, by quadrature."""
    if power == 0.0:
        return 1.0
    norm = 1.0 / math.sqrt(2.0 * math.pi * t)
    inv_2t = 0.5 / t

    def integrand(b: float) -> float:
        # log space: sinh(b)^power alone can overflow long before the
        # Gaussian factor brings the product back into range
        if b <= 0.0:
            return 0.0
        log_val = power * _log_sinh(b) - b * b * inv_2t
        return 2.0 * norm * math.exp(log_val) if log_val < 700.0 else math.inf

    # split so the possible algebraic singularity at 0 sits at an endpoint
    head, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12)
    tail, _ = integrate.quad(integrand, 1.0, np.inf, epsabs=1e-13, epsrel=1e-12)
    return head + tail


def mellin_A(
    t: float,
    nu: float,
    n_mc: int,
    rng: RngStream,
    n_steps: int = 4096,
    n_workers: int = 1,
) -> MellinCheck:
    """Both sides of E[A_t^(nu-1)] = sqrt(pi)/(2^(nu-1) Gamma(nu-1/2))
    * E|sinh B_t|^(2 nu - 2), for nu > 1/2.

    The left side is a Monte Carlo mean over simulated functionals with its
    sample standard error; the right side is deterministic quadrature.
    """
    if nu <= 0.5:
        raise ValueError(f"nu must be > 1/2 (Gamma pole), got {nu}")
    if n_mc < 1:
        raise ValueError(f"n_mc must be >= 1, got {n_mc}")
    batch = sample_functionals(t, n_mc, rng, n_steps=n_steps, n_workers=n_workers)
    powers = batch.a_t ** (nu - 1.0)
    lhs = float(powers.mean())
    mc_se = float(powers.std(ddof=1) / math.sqrt(len(batch))) if len(batch) > 1 else 0.0
    prefactor = math.sqrt(math.pi) / (2.0 ** (nu - 1.0) * gamma_fn(nu - 0.5))
    rhs = float(prefactor * _abs_sinh_moment(t, 2.0 * nu - 2.0))
    return MellinCheck(nu, t, lhs, rhs, mc_se, len(batch))


def _validate_cdf_args(t: float, b: float) -> float:
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    if b <= 0:
        raise ValueError(f"local-time threshold must be > 0, got {b}")
    return math.sqrt(t)


def joint_cdf_BL(t: float, a: float, b: float) -> float:
    """P(B_t <= a, L^0_t >= b) for b > 0 (level-zero local time)."""
    rt = _validate_cdf_args(t, b)
    if a >= 0:
        p = 2.0 * ndtr(-b / rt) - ndtr((-a - b) / rt)
    else:
        p = ndtr((a - b) / rt)
    return float(min(max(p, 0.0), 1.0))


def joint_cdf_BL_level(t: float, x: float, a: float, b: float) -> float:
    """P(B_t <= a, L^x_t >= b) for b > 0, any level x."""
    rt = _validate_cdf_args(t, b)
    u = b + abs(x)
    if a >= x:
        p = 2.0 * ndtr(-u / rt) - ndtr((x - a - u) / rt)
    else:
        p = ndtr((a - x - u) / rt)
    return float(min(max(p, 0.0), 1.0))


def joint_cdf_shifted(t: float, x: float, a: float, b: float) -> float:
    """P(x + B_t <= a, L^{-x}_t >= b) for b > 0.

    Change of variables of :func:`joint_cdf_BL_level`: equals
    ``joint_cdf_BL_level(t, -x, a - x, b)``.
    """
    rt = _validate_cdf_args(t, b)
    u = b + abs(x)
    if a >= 0:
        p = 2.0 * ndtr(-u / rt) - ndtr((-a - u) / rt)
    else:
        p = ndtr((a - u) / rt)
    return float(min(max(p, 0.0), 1.0))


def joint_pdf_BL(t: float, x: float, a: float, b: float) -> float:
    """Joint density of (B_t, L^x_t) at (a, b), b > 0."""
    rt = _validate_cdf_args(t, b)
    w = abs(a - x) + b + abs(x)
    return float(w / math.sqrt(2.0 * math.pi * t**3) * math.exp(-(w * w) / (2.0 * t)))


def no_hit_probability(t: float, x: float) -> float:
    """Atom mass P(L^x_t = 0) = 1 - 2 Phi(-|x|/sqrt(t))."""
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    return float(max(0.0, 1.0 - 2.0 * ndtr(-abs(x) / math.sqrt(t))))


def theorem_rhs_cdf(t: float, x: float, y: float, z: float) -> float:
    """P(sinh(x + B_t) <= y, sinh(|x| + L^{-x}_t) - sinh|x| >= z) for z > 0.

    Both events are monotone images of (x + B_t, L^{-x}_t): the first is
    ``x + B_t <= asinh(y)`` and the second is
    ``L^{-x}_t >= asinh(z + sinh|x|) - |x|`` (positive whenever z > 0), so
    the probability reduces to :func:`joint_cdf_shifted`.
    """
    if z <= 0:
        raise ValueError(f"z must be > 0, got {z}")
    threshold = float(np.arcsinh(z + math.sinh(abs(x))) - abs(x))
    return joint_cdf_shifted(t, x, float(np.arcsinh(y)), threshold)
