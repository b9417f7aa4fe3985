"""Kernel backend tests: numpy/numba agreement and selection flag."""

import importlib
import os
import subprocess
import sys

import numpy as np
import pytest

from ambciq import _kernels_numpy

try:
    from ambciq import _kernels_numba
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def random_problem(seed, M=4, D=37, K=2, H=64):
    rng = np.random.default_rng(seed)

    def cn(shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    return (cn((M, D)), cn((M, H)), cn((K, M, D)), cn((K, M, D)),
            np.exp(1j * rng.uniform(0, 2 * np.pi, (K, H))))


class TestNumpyKernel:
    def test_matches_direct_loop(self):
        zt, base, A, B, rho = random_problem(0, M=3, D=5, K=2, H=7)
        got = _kernels_numpy.residual_sq(zt, base, A, B, rho)
        for n in range(5):
            for h in range(7):
                val = zt[:, n] - base[:, h]
                for k in range(2):
                    val = val - A[k, :, n] * rho[k, h] - B[k, :, n] * np.conj(rho[k, h])
                assert got[n, h] == pytest.approx(np.linalg.norm(val) ** 2, rel=1e-12)

    def test_chunking_invariance(self, monkeypatch):
        zt, base, A, B, rho = random_problem(1, D=53)
        full = _kernels_numpy.residual_sq(zt, base, A, B, rho)
        monkeypatch.setattr(_kernels_numpy, "_CHUNK_ENTRIES", 700)
        chunked = _kernels_numpy.residual_sq(zt, base, A, B, rho)
        assert np.array_equal(full, chunked)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
class TestNumbaKernel:
    def test_agrees_with_numpy(self):
        for seed in range(3):
            zt, base, A, B, rho = random_problem(seed)
            a = _kernels_numpy.residual_sq(zt, base, A, B, rho)
            b = _kernels_numba.residual_sq(zt, base, A, B, rho)
            assert np.allclose(a, b, rtol=1e-10, atol=1e-12 * a.max())


class TestSelection:
    def test_env_flag_forces_numpy(self):
        code = ("import ambciq.backend as b; print(b.active_backend())")
        out = subprocess.run([sys.executable, "-c", code],
                             env={**os.environ, "AMBCIQ_BACKEND": "numpy"},
                             capture_output=True, text=True)
        assert out.stdout.strip() == "numpy"

    @pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
    def test_default_prefers_numba(self):
        env = {k: v for k, v in os.environ.items() if k != "AMBCIQ_BACKEND"}
        code = ("import ambciq.backend as b; print(b.active_backend())")
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True)
        assert out.stdout.strip() == "numba"

    def test_bad_flag_rejected(self):
        code = "import ambciq.backend"
        out = subprocess.run([sys.executable, "-c", code],
                             env={**os.environ, "AMBCIQ_BACKEND": "cuda"},
                             capture_output=True, text=True)
        assert out.returncode != 0
