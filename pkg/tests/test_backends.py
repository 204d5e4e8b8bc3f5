import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from skewshift import _backend, _fallback
from skewshift.phase import MOD, golden_mean

needs_ext = pytest.mark.skipif("cython" not in _backend.available(), reason="compiled kernels not built")
W = golden_mean().frac.frac


@needs_ext
@given(st.integers(0, MOD - 1), st.integers(0, MOD - 1), st.integers(1, 3000))
def test_potential_sequence_bit_identical(x, y, n):
    ext = _backend.get("cython")
    assert np.array_equal(ext.potential_sequence(x, y, W, n), _fallback.potential_sequence(x, y, W, n))


@needs_ext
@pytest.mark.parametrize("P", [1, 7, 8, 9, 37])
def test_products_bit_identical(P):
    ext = _backend.get("cython")
    rng = np.random.default_rng(P)
    xs, ys = rng.integers(0, 2**64 - 1, size=(2, P), dtype=np.uint64)
    scales = np.array([1, 31, 32, 33, 500, 1999], dtype=np.int64)
    for lam, E in [(0.5, 0.0), (0.5, -2.495123260049612), (2.0, 1.0), (0.0, 3.0)]:
        for name in ("products", "products_dd"):
            m1, l1 = getattr(ext, name)(xs, ys, W, lam, E, scales, 2.0)
            m2, l2 = getattr(_fallback, name)(xs, ys, W, lam, E, scales, 2.0)
            assert np.array_equal(m1, m2) and np.array_equal(l1, l2)


def test_compensated_close_to_plain():
    rng = np.random.default_rng(3)
    xs, ys = rng.integers(0, 2**64 - 1, size=(2, 5), dtype=np.uint64)
    scales = np.array([1, 40, 900], dtype=np.int64)
    m1, l1 = _fallback.products(xs, ys, W, 0.5, 0.7, scales, 2.0)
    m2, l2 = _fallback.products_dd(xs, ys, W, 0.5, 0.7, scales, 2.0)
    assert np.array_equal(l1, l2)
    assert np.array_equal(m1[0], m2[0]) and np.allclose(m1, m2, rtol=1e-9, atol=1e-12)


@needs_ext
def test_sturm_and_bisect_bit_identical():
    ext = _backend.get("cython")
    rng = np.random.default_rng(0)
    diag = rng.uniform(-1, 1, 300)
    shifts = np.linspace(-3, 3, 41)
    assert np.array_equal(ext.sturm_counts(diag, shifts), _fallback.sturm_counts(diag, shifts))
    ranks = np.arange(300, dtype=np.int64)
    assert np.array_equal(ext.bisect(diag, ranks, -3.0, 3.0, 1e-12), _fallback.bisect(diag, ranks, -3.0, 3.0, 1e-12))


def test_backend_selection():
    assert _backend.NAME in ("cython", "python")
    assert _backend.get("python") is _fallback
    with pytest.raises(ValueError):
        _backend.get("fortran")


def test_pure_python_env_switch():
    env = dict(os.environ, SKEWSHIFT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import skewshift; print(skewshift.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_benchmark_runs(capsys):
    import runpy

    path = os.path.join(os.path.dirname(__file__), "..", "benchmarks", "bench_kernels.py")
    mod = runpy.run_path(path)
    mod["main"](["--points", "3", "--steps", "64", "--size", "10", "--repeat", "1"])
    out = capsys.readouterr().out
    assert "products_dd" in out and "False" not in out
