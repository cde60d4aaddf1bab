import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from bougerol import (
    RngStream,
    density_A,
    density_A_interval,
    joint_cdf_BL,
    joint_cdf_BL_level,
    joint_cdf_shifted,
    joint_pdf_BL,
    mellin_A,
    no_hit_probability,
    normal_cdf,
    sample_functionals,
    theorem_rhs_cdf,
)

TWO_PHI_M1 = 0.31731050786291415  # 2 Phi(-1)
TWO_PHI_M07 = 0.48392730444614607  # 2 Phi(-0.7)


def integrate_density(t: float, v_lo: float, v_hi: float, tol: float = 1e-9) -> float:
    """Outer adaptive quadrature of the pointwise density (normalization oracle)."""
    edges = [v_lo]
    v = max(v_lo, 0.25)
    while v < v_hi:
        edges.append(v)
        v *= 4.0
    edges.append(v_hi)
    total = 0.0
    for lo, hi in zip(edges, edges[1:]):
        if hi <= lo:
            continue
        val, _ = integrate.quad(
            lambda u: density_A(t, u, tol).value, lo, hi, epsabs=tol, epsrel=1e-10, limit=200
        )
        total += val
    return total


class TestNormalCdf:
    def test_center(self):
        assert normal_cdf(0.0) == 0.5

    def test_symmetry_identity(self):
        xs = np.linspace(-8.0, 8.0, 2001)
        assert np.abs(normal_cdf(xs) + normal_cdf(-xs) - 1.0).max() < 1e-15

    def test_limits(self):
        assert normal_cdf(-40.0) == 0.0
        assert normal_cdf(40.0) == 1.0


class TestDensityA:
    def test_input_validation(self):
        with pytest.raises(ValueError):
            density_A(0.0, 1.0)
        with pytest.raises(ValueError):
            density_A(1.0, -1.0)
        with pytest.raises(ValueError):
            density_A(1.0, 1.0, tol=0.0)

    def test_small_t_flag(self):
        assert "small_t_unstable" in density_A(0.1, 1.0).flags
        assert density_A(0.5, 1.0).flags == ()

    def test_essential_singularity_at_zero(self):
        assert density_A(1.0, 1e-6).value < 1e-10

    def test_error_estimate_honored(self):
        ev = density_A(1.0, 1.0, tol=1e-9)
        assert ev.abs_error_estimate <= 1e-9
        assert ev.nodes_used > 0

    def test_normalization_t1(self):
        # tail above 2e5 is below 1e-8 by the running-max bound on A_t
        assert abs(integrate_density(1.0, 0.0, 2.0e5) - 1.0) < 1e-6

    def test_interval_mass_matches_pointwise_quadrature(self):
        mass = density_A_interval(1.0, 0.5, 1.5).value
        direct, _ = integrate.quad(lambda v: density_A(1.0, v, 1e-11).value, 0.5, 1.5)
        assert abs(mass - direct) < 1e-9

    def test_interval_validation(self):
        with pytest.raises(ValueError):
            density_A_interval(1.0, 2.0, 1.0)

    def test_positive_on_bulk(self):
        for v in (0.2, 0.7, 1.5, 4.0):
            assert density_A(1.0, v).value > 0.0

    def test_matches_ecdf_derivative(self):
        # central difference of the MC CDF of A_t agrees within MC error
        batch = sample_functionals(1.0, 100_000, RngStream(40), n_steps=1024)
        delta = 0.25
        for v in (1.0, 2.0):
            f_hi = (batch.a_t <= v + delta).mean()
            f_lo = (batch.a_t <= v - delta).mean()
            slope = (f_hi - f_lo) / (2.0 * delta)
            dens = density_A(1.0, v).value
            se = math.sqrt(0.25 / len(batch)) / delta * math.sqrt(2.0)
            bias = delta**2  # curvature allowance on this scale
            assert abs(slope - dens) < 4.0 * se + bias


class TestMellin:
    def test_nu_one_exact(self):
        chk = mellin_A(1.0, 1.0, 1000, RngStream(1), n_steps=16)
        assert chk.lhs == 1.0
        assert chk.mc_se == 0.0
        assert abs(chk.rhs - 1.0) < 1e-14

    def test_nu_validation(self):
        with pytest.raises(ValueError):
            mellin_A(1.0, 0.5, 100, RngStream(1))

    def test_nu_15_against_quadrature_and_closed_form(self):
        chk = mellin_A(1.0, 1.5, 100_000, RngStream(2), n_steps=4096)
        closed = math.sqrt(math.pi) / math.sqrt(2.0) * math.exp(0.5) * (2 * normal_cdf(1.0) - 1)
        assert abs(chk.rhs - closed) < 1e-10
        assert abs(chk.lhs - chk.rhs) <= 3.0 * chk.mc_se

    def test_nu_2_rhs_equals_mean_of_A(self):
        # E[A_t^1] = (exp(2t) - 1)/2 gives an exact cross-check of the quadrature
        chk = mellin_A(0.5, 2.0, 100_000, RngStream(3), n_steps=4096)
        assert abs(chk.rhs - (math.exp(1.0) - 1.0) / 2.0) < 1e-9
        assert abs(chk.lhs - chk.rhs) <= 3.0 * chk.mc_se


class TestJointCdfs:
    def test_level0_at_origin(self):
        assert abs(joint_cdf_BL(1.0, 0.0, 1e-12) - 0.5) < 1e-9

    def test_level0_marginal_of_local_time(self):
        assert abs(joint_cdf_BL(1.0, 1e9, 1.0) - TWO_PHI_M1) < 1e-15

    def test_level0_negative_endpoint(self):
        assert abs(joint_cdf_BL(1.0, -0.5, 0.3) - normal_cdf(-0.8)) < 1e-15

    def test_level0_rejects_bad_b(self):
        with pytest.raises(ValueError):
            joint_cdf_BL(1.0, 0.0, 0.0)

    def test_level_reduces_to_level0(self):
        for a in (-1.0, -0.2, 0.0, 0.4, 2.0):
            for b in (0.1, 0.5, 2.0):
                assert joint_cdf_BL_level(1.3, 0.0, a, b) == joint_cdf_BL(1.3, a, b)

    def test_level_survival_limit(self):
        val = joint_cdf_BL_level(1.0, 0.5, math.inf, 0.2)
        assert abs(val - TWO_PHI_M07) < 1e-15

    def test_level_monotone_in_threshold(self):
        vals = [joint_cdf_BL_level(1.0, 0.5, 0.3, b) for b in np.linspace(0.05, 3.0, 40)]
        assert all(x >= y - 1e-15 for x, y in zip(vals, vals[1:]))

    def test_shifted_equals_level0_at_origin_level(self):
        for a in (-0.7, 0.0, 1.1):
            assert joint_cdf_shifted(1.0, 0.0, a, 0.4) == joint_cdf_BL(1.0, a, 0.4)

    def test_shifted_change_of_variables(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            t = float(rng.uniform(0.2, 3.0))
            x = float(rng.normal())
            a = float(rng.normal())
            b = float(rng.uniform(0.05, 2.0))
            assert joint_cdf_shifted(t, x, a, b) == pytest.approx(
                joint_cdf_BL_level(t, -x, a - x, b), abs=1e-15
            )

    def test_shifted_frozen_example(self):
        val = joint_cdf_shifted(2.0, 1.0, -0.2, 0.5)
        assert val == normal_cdf((-0.2 - 0.5 - 1.0) / math.sqrt(2.0))
        assert abs(val - 0.114666) < 5e-7

    @given(
        t=st.floats(0.1, 5.0),
        x=st.floats(-3.0, 3.0),
        b=st.floats(0.01, 3.0),
        a1=st.floats(-5.0, 5.0),
        a2=st.floats(-5.0, 5.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_bounds_and_monotonicity(self, t, x, b, a1, a2):
        lo, hi = sorted([a1, a2])
        v_lo = joint_cdf_BL_level(t, x, lo, b)
        v_hi = joint_cdf_BL_level(t, x, hi, b)
        assert 0.0 <= v_lo <= v_hi <= 1.0


class TestJointPdf:
    def test_frozen_point(self):
        assert abs(joint_pdf_BL(1.0, 0.0, 0.0, 1.0) - 0.24197072451914337) < 1e-16

    def test_reflection_symmetry(self):
        for a in (-1.0, 0.3, 2.0):
            assert joint_pdf_BL(1.0, 0.5, a, 0.7) == joint_pdf_BL(1.0, 0.5, 1.0 - a, 0.7)

    def test_normalization_including_atom(self):
        t, x = 1.0, 0.5
        # split the endpoint integral at the |a - x| kink for the quadrature
        left, _ = integrate.dblquad(
            lambda a, b: joint_pdf_BL(t, x, a, b), 0.0, 10.0, lambda b: -9.0, lambda b: x,
            epsabs=1e-9,
        )
        right, _ = integrate.dblquad(
            lambda a, b: joint_pdf_BL(t, x, a, b), 0.0, 10.0, lambda b: x, lambda b: 9.0,
            epsabs=1e-9,
        )
        total = left + right + no_hit_probability(t, x)
        assert abs(total - 1.0) < 1e-6

    def test_differentiates_from_cdf(self):
        # mixed central difference of P(B<=a, L>=b) returns -pdf
        h = 1e-3
        for (t, x, a, b) in ((1.0, 0.0, 0.4, 0.6), (1.0, 0.5, -0.3, 0.4), (2.0, -1.0, 0.7, 1.0)):
            f = joint_cdf_BL_level
            mixed = (
                f(t, x, a + h, b + h) - f(t, x, a - h, b + h)
                - f(t, x, a + h, b - h) + f(t, x, a - h, b - h)
            ) / (4.0 * h * h)
            assert abs(-mixed - joint_pdf_BL(t, x, a, b)) < 1e-5


class TestTheoremRhsCdf:
    def test_x_zero_collapse(self):
        for y in (-1.0, 0.0, 0.8):
            for z in (0.2, 1.5):
                assert theorem_rhs_cdf(1.0, 0.0, y, z) == joint_cdf_BL(
                    1.0, float(np.arcsinh(y)), float(np.arcsinh(z))
                )

    def test_tail_in_z(self):
        assert theorem_rhs_cdf(1.0, 0.5, 0.3, 200.0) < 1e-6

    def test_negative_y_branch(self):
        val = theorem_rhs_cdf(1.0, 0.5, -0.25, 0.4)
        expected = normal_cdf(np.arcsinh(-0.25) - np.arcsinh(0.4 + math.sinh(0.5)))
        assert val == pytest.approx(float(expected), abs=1e-15)

    def test_z_validation(self):
        with pytest.raises(ValueError):
            theorem_rhs_cdf(1.0, 0.5, 0.0, 0.0)

    @given(
        t=st.floats(0.2, 4.0),
        x=st.floats(-2.0, 2.0),
        y1=st.floats(-4.0, 4.0),
        y2=st.floats(-4.0, 4.0),
        z=st.floats(0.01, 3.0),
    )
    @settings(max_examples=150, deadline=None)
    def test_monotone_in_y(self, t, x, y1, y2, z):
        lo, hi = sorted([y1, y2])
        assert theorem_rhs_cdf(t, x, lo, z) <= theorem_rhs_cdf(t, x, hi, z) + 1e-15

    def test_large_x_stable(self):
        # asinh-based thresholds must not overflow or cancel at large levels
        val = theorem_rhs_cdf(1.0, 30.0, 1.0, 5.0)
        assert 0.0 <= val <= 1.0 and np.isfinite(val)
