import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from bougerol import (
    BrownianPath,
    GridSpec,
    RngStream,
    sample_brownian_path,
    sample_brownian_paths,
    time_reverse_path,
)

N = 100_000


class TestGridSpec:
    def test_step(self):
        assert GridSpec(2.0, 8).step == 0.25

    def test_times(self):
        np.testing.assert_allclose(GridSpec(1.0, 4).times(), [0, 0.25, 0.5, 0.75, 1.0])

    @pytest.mark.parametrize("t_end,n_steps", [(0.0, 4), (-1.0, 4), (1.0, 0), (math.inf, 4)])
    def test_invalid(self, t_end, n_steps):
        with pytest.raises(ValueError):
            GridSpec(t_end, n_steps)


class TestBrownianPath:
    def test_single_step_grid(self):
        p = sample_brownian_path(GridSpec(1.0, 1), RngStream(0))
        assert p.values.shape == (2,)
        assert p.values[0] == 0.0

    def test_deterministic(self):
        g = GridSpec(1.0, 64)
        a = sample_brownian_path(g, RngStream(42, 0))
        b = sample_brownian_path(g, RngStream(42, 0))
        assert np.array_equal(a.values, b.values)

    def test_initial_value_enforced(self):
        with pytest.raises(ValueError):
            BrownianPath(GridSpec(1.0, 1), np.array([1.0, 2.0]))

    def test_length_enforced(self):
        with pytest.raises(ValueError):
            BrownianPath(GridSpec(1.0, 4), np.zeros(3))

    def test_endpoint_law(self):
        # endpoints at t=1 against the normal CDF oracle
        ends = np.array(
            [sample_brownian_path(GridSpec(1.0, 1), RngStream(3, i)).values[1]
             for i in range(N)]
        )
        assert sps.kstest(ends, "norm").pvalue > 0.01

    def test_increment_law(self):
        g = GridSpec(1.0, 4096)
        p = sample_brownian_path(g, RngStream(8))
        inc = np.diff(p.values)
        assert sps.kstest(inc / math.sqrt(g.step), "norm").pvalue > 0.01
        rho = float(np.corrcoef(inc[:-1], inc[1:])[0, 1])
        assert abs(rho) < 3.0 / math.sqrt(inc.size - 1)

    def test_batch_rows_match_child_streams(self):
        g = GridSpec(1.0, 16)
        rows = sample_brownian_paths(g, 5, RngStream(4))
        single = sample_brownian_path(g, RngStream(4).child(3))
        assert np.array_equal(rows[3], single.values)


class TestTimeReversal:
    def test_two_point_case(self):
        p = BrownianPath(GridSpec(1.0, 1), np.array([0.0, 1.0]))
        assert np.array_equal(time_reverse_path(p).values, [0.0, -1.0])

    def test_endpoint_negation_exact(self):
        p = sample_brownian_path(GridSpec(1.0, 128), RngStream(5))
        assert time_reverse_path(p).values[-1] == -p.values[-1]

    def test_involution(self):
        p = sample_brownian_path(GridSpec(1.0, 256), RngStream(6))
        rr = time_reverse_path(time_reverse_path(p))
        # exact up to one rounding of (v[k]-v[n])+v[n] per element
        tol = 4 * np.finfo(float).eps * (1.0 + np.abs(p.values).max())
        np.testing.assert_allclose(rr.values, p.values, rtol=0, atol=tol)

    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=20))
    @settings(max_examples=50, deadline=None)
    def test_involution_property(self, increments):
        values = np.concatenate([[0.0], np.cumsum(increments)])
        p = BrownianPath(GridSpec(1.0, len(increments)), values)
        rev = time_reverse_path(p)
        assert rev.values[0] == 0.0
        rr = time_reverse_path(rev)
        tol = 8 * np.finfo(float).eps * (1.0 + np.abs(p.values).max())
        np.testing.assert_allclose(rr.values, p.values, rtol=0, atol=tol)

    def test_law_invariance(self):
        # endpoint law of reversed paths matches fresh endpoints at N = 1e5
        g = GridSpec(1.0, 8)
        fresh = sample_brownian_paths(g, N, RngStream(10))
        other = sample_brownian_paths(g, N, RngStream(11))
        reversed_paths = other[:, ::-1] - other[:, -1:]
        # the matrix transform agrees with the path op row by row
        row_op = time_reverse_path(BrownianPath(g, other[17])).values
        assert np.array_equal(reversed_paths[17], row_op)
        assert sps.ks_2samp(fresh[:, -1], reversed_paths[:, -1]).pvalue > 0.01
