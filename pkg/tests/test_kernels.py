import os
import subprocess
import sys

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from scadasim import _kernels_py, kernels

try:
    from scadasim import _kernels as compiled
except ImportError:
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="extension not built")


def test_backend_is_known():
    assert kernels.BACKEND in ("cython", "python")


def test_env_forces_fallback():
    code = "from scadasim import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, SCADASIM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
@settings(max_examples=300)
@given(st.binary(max_size=2000), st.integers(0, 0xFFFF))
def test_checksum_parity(data, initial):
    assert compiled.ones_complement_sum(data, initial) == _kernels_py.ones_complement_sum(data, initial)


@needs_compiled
@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 10.0), st.sampled_from([0.01, 0.1, 1.0]))
def test_integrate_parity(seed, vol_101, dt):
    rng = np.random.default_rng(seed)
    pump = rng.random(500) < 0.5
    valve = rng.random(500) < 0.3
    args = (vol_101, 10.0 - vol_101, pump, valve, dt, 3.0, 6.0, 1.0)
    for a, b in zip(compiled.integrate(*args), _kernels_py.integrate(*args)):
        np.testing.assert_array_equal(np.asarray(a), np.asarray(b))
