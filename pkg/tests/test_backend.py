"""Compiled kernels and the numpy fallback must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from bougerol import _backend, _kernels_py
from bougerol.rng import RngStream

compiled = pytest.importorskip("bougerol._kernels", reason="compiled kernels not built")


@pytest.fixture(scope="module")
def increments():
    gen = RngStream(555).generator()
    step = 1.0 / 512
    dw = gen.standard_normal((64, 512)) * np.sqrt(step)
    db = gen.standard_normal((64, 512)) * np.sqrt(step)
    return db, dw, step


def test_path_stats_agree(increments):
    _, dw, step = increments
    b_py, a_py, m_py = _kernels_py.path_stats(dw, step)
    b_cy, a_cy, m_cy = compiled.path_stats(dw, step)
    assert np.array_equal(b_py, b_cy)  # pure sequential sums: bitwise
    assert np.array_equal(m_py, m_cy)
    np.testing.assert_allclose(a_py, a_cy, rtol=1e-12)


def test_em_endpoints_agree(increments):
    _, dw, step = increments
    np.testing.assert_allclose(
        _kernels_py.em_endpoints(dw, step, 0.3),
        compiled.em_endpoints(dw, step, 0.3),
        rtol=1e-12,
    )


def test_explicit_stats_agree(increments):
    db, dw, step = increments
    py = _kernels_py.explicit_stats(db, dw, step, 0.6)
    cy = compiled.explicit_stats(db, dw, step, 0.6)
    for a, b in zip(py, cy):
        np.testing.assert_allclose(a, b, rtol=1e-11, atol=1e-13)


def test_explicit_stats_shape_mismatch():
    with pytest.raises(ValueError):
        compiled.explicit_stats(np.zeros((2, 3)), np.zeros((2, 4)), 0.1, 0.0)
    with pytest.raises(ValueError):
        _kernels_py.explicit_stats(np.zeros((2, 3)), np.zeros((2, 4)), 0.1, 0.0)


def test_backend_selected():
    assert _backend.backend_name() in ("cython", "numpy")


def test_fallback_env_override():
    code = (
        "import bougerol as bg; import numpy as np; "
        "print(bg.backend_name()); "
        "b = bg.sample_functionals(1.0, 64, bg.RngStream(5), n_steps=32); "
        "print(repr(float(b.a_t.sum())))"
    )
    env = dict(os.environ, BOUGEROL_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True
    ).stdout.split()
    assert out[0] == "numpy"
    # same draws through the fallback: sums agree to rounding
    batch = __import__("bougerol").sample_functionals(1.0, 64, RngStream(5), n_steps=32)
    assert abs(float(batch.a_t.sum()) - float(out[1])) < 1e-9
