"""Equivalence of the compiled and pure-Python rolling kernels."""

import numpy as np
import pytest

from pumpscan._kernels import rolling_py

try:
    from pumpscan._kernels import _rolling_cy
except ImportError:
    _rolling_cy = None

needs_ext = pytest.mark.skipif(_rolling_cy is None,
                               reason="compiled kernel not built")


def run_both(rng, n, start_hour, d_span, window_days=30, lag=12):
    vol = rng.lognormal(1, 1.5, n)
    vol[rng.random(n) < 0.2] = 0.0
    opn = rng.lognormal(0, 0.3, n)
    syn = (rng.random(n) < 0.1).astype(np.uint8)
    args = (opn, vol, syn, start_hour, lag, window_days, d_span)
    return rolling_py.rolling_contexts(*args), _rolling_cy.rolling_contexts(*args)


@needs_ext
@pytest.mark.parametrize("start_hour", [0, 5, 23])
@pytest.mark.parametrize("d_span", [1, 10, 20])
def test_backends_agree(rng, start_hour, d_span):
    py_out, cy_out = run_both(rng, 3000, start_hour, d_span)
    for a, b in zip(py_out, cy_out):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=0)


@needs_ext
def test_backends_agree_long_series(rng):
    py_out, cy_out = run_both(rng, 20_000, 7, 10)
    for a, b in zip(py_out, cy_out):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=0)


@needs_ext
def test_backends_agree_short_windows(rng):
    py_out, cy_out = run_both(rng, 100, 3, 2, window_days=2, lag=3)
    for a, b in zip(py_out, cy_out):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=0)


def test_env_var_forces_python_backend(monkeypatch):
    import importlib
    import pumpscan._kernels as kernels

    monkeypatch.setenv("PUMPSCAN_PURE_PYTHON", "1")
    reloaded = importlib.reload(kernels)
    try:
        assert reloaded.BACKEND == "python"
    finally:
        monkeypatch.delenv("PUMPSCAN_PURE_PYTHON")
        importlib.reload(kernels)
