import math

import numpy as np
import pytest
from scipy import stats as sps

from bougerol import (
    BrownianPath,
    GridSpec,
    RngStream,
    exp_functional,
    reversed_pair,
    sample_functionals,
    time_reverse_path,
)

EXACT_INT_EXP2 = (math.e**2 - 1.0) / 2.0  # integral of exp(2s) over [0, 1]


def _linear_path(n: int) -> BrownianPath:
    g = GridSpec(1.0, n)
    return BrownianPath(g, g.times())


class TestExpFunctional:
    def test_zero_path(self):
        p = BrownianPath(GridSpec(1.0, 4096), np.zeros(4097))
        assert exp_functional(p).a_t == 1.0

    def test_linear_path_against_analytic_integral(self):
        s = exp_functional(_linear_path(4096))
        assert abs(s.a_t - EXACT_INT_EXP2) < 1e-4

    def test_trapezoid_second_order(self):
        # halving the step cuts the error by ~4 on a smooth integrand
        errors = [abs(exp_functional(_linear_path(n)).a_t - EXACT_INT_EXP2)
                  for n in (128, 256, 512)]
        for e0, e1 in zip(errors, errors[1:]):
            assert 3.4 < e0 / e1 < 4.6

    def test_richardson_diagnostic(self):
        # |a(n) - a(4n)| itself decreases by ~4 per step halving
        a = {n: exp_functional(_linear_path(n)).a_t for n in (128, 256, 512, 1024)}
        ratio = abs(a[128] - a[512]) / abs(a[256] - a[1024])
        assert 2.8 < ratio < 5.2

    def test_derived_fields(self):
        p = _linear_path(64)
        s = exp_functional(p)
        assert s.b_t == 1.0
        assert abs(s.exp_b * s.exp_neg_b - 1.0) < 1e-15
        assert not s.overflowed

    def test_overflow_flagged(self):
        values = np.concatenate([[0.0], np.full(7, 400.0)])
        p = BrownianPath(GridSpec(1.0, 7), values)
        s = exp_functional(p)
        assert s.overflowed
        assert math.isinf(s.a_t)

    def test_horizon_monotonicity(self):
        g = GridSpec(1.0, 256)
        p = np.cumsum(RngStream(3).generator().standard_normal(256)) * math.sqrt(g.step)
        values = np.concatenate([[0.0], p])
        full = exp_functional(BrownianPath(g, values))
        for k in (32, 128, 200):
            sub = BrownianPath(GridSpec(k * g.step, k), values[: k + 1])
            assert exp_functional(sub).a_t <= full.a_t


class TestReversedPair:
    def test_second_is_trapezoid_of_reversed_path(self):
        p = BrownianPath(GridSpec(1.0, 64), np.concatenate([[0.0], np.sin(np.arange(1, 65))]))
        first, second = reversed_pair(p)
        direct = exp_functional(time_reverse_path(p))
        assert second.a_t == direct.a_t
        assert first.a_t == exp_functional(p).a_t

    def test_reversed_functional_scaling_identity(self):
        # A over the reversed path equals exp(-2 B_t) * A pathwise
        g = GridSpec(1.5, 128)
        vals = np.concatenate([[0.0], np.cumsum(RngStream(9).generator().standard_normal(128))])
        vals *= math.sqrt(g.step)
        first, second = reversed_pair(BrownianPath(g, vals))
        np.testing.assert_allclose(second.a_t, first.a_t * math.exp(-2 * first.b_t), rtol=1e-12)
        assert second.b_t == -first.b_t

    def test_exp_b_symmetry_in_law(self):
        b1 = sample_functionals(1.0, 20_000, RngStream(20), n_steps=64)
        b2 = sample_functionals(1.0, 20_000, RngStream(21), n_steps=64)
        assert sps.ks_2samp(b1.exp_b, b2.exp_neg_b).pvalue > 0.01


class TestBatchSampler:
    def test_deterministic(self):
        a = sample_functionals(1.0, 1000, RngStream(5), n_steps=32)
        b = sample_functionals(1.0, 1000, RngStream(5), n_steps=32)
        assert np.array_equal(a.a_t, b.a_t)
        assert np.array_equal(a.b_t, b.b_t)

    def test_workers_do_not_change_results(self):
        a = sample_functionals(1.0, 700, RngStream(5), n_steps=32, n_workers=1)
        b = sample_functionals(1.0, 700, RngStream(5), n_steps=32, n_workers=3)
        assert np.array_equal(a.a_t, b.a_t)

    def test_positive(self):
        batch = sample_functionals(0.5, 3000, RngStream(6), n_steps=64)
        assert (batch.a_t > 0).all()

    def test_upper_bound(self):
        batch = sample_functionals(1.0, 2000, RngStream(7), n_steps=64)
        assert (batch.a_t <= 1.0 * np.exp(2.0 * batch.b_max) * (1 + 1e-12)).all()

    def test_endpoint_law(self):
        batch = sample_functionals(2.0, 50_000, RngStream(8), n_steps=64)
        assert sps.kstest(batch.b_t / math.sqrt(2.0), "norm").pvalue > 0.01

    def test_mean_matches_closed_form(self):
        # E[A_t] = (exp(2t) - 1)/2
        batch = sample_functionals(0.5, 40_000, RngStream(9), n_steps=512)
        target = (math.exp(1.0) - 1.0) / 2.0
        se = batch.a_t.std(ddof=1) / math.sqrt(len(batch))
        assert abs(batch.a_t.mean() - target) < 5 * se

    def test_overflow_rejection_policy(self):
        # enormous horizon pushes the running max past the cutoff
        batch = sample_functionals(1e6, 64, RngStream(10), n_steps=64)
        assert batch.n_rejected > 0
        assert len(batch) + batch.n_rejected == 64
        assert np.isfinite(batch.a_t).all()

    def test_invalid_n_mc(self):
        with pytest.raises(ValueError):
            sample_functionals(1.0, 0, RngStream(1))
