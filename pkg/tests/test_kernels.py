"""Backend equivalence: the compiled kernels must reproduce the pure-numpy
fallback stream for stream."""

import numpy as np
import pytest

from qsinf import rng
from qsinf._kernels import _pure

core = pytest.importorskip("qsinf._kernels._core")


def _decay(alpha_sq=1.0):
    h = np.zeros((2, 2), dtype=complex)
    a = np.zeros((2, 2), dtype=complex)
    a[0, 1] = np.sqrt(alpha_sq)
    return h, [a]


def _driven_three_level():
    h = np.zeros((3, 3), dtype=complex)
    h[0, 1] = h[1, 0] = 0.7
    a1 = np.zeros((3, 3), dtype=complex)
    a1[1, 2] = 0.9
    a2 = np.zeros((3, 3), dtype=complex)
    a2[0, 1] = 0.6
    return h, [a1, a2]


class TestRng:
    def test_uniform_range_and_determinism(self):
        u = rng.uniforms(rng.derive_seed(1, 0), 0, 10000)
        assert u.min() >= 0 and u.max() < 1
        assert abs(u.mean() - 0.5) < 0.02
        assert np.array_equal(u, rng.uniforms(rng.derive_seed(1, 0), 0, 10000))

    def test_streams_uncorrelated(self):
        a = rng.uniforms(rng.derive_seed(7, 0), 0, 5000)
        b = rng.uniforms(rng.derive_seed(7, 1), 0, 5000)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.05

    def test_normals_standard(self):
        z = rng.normal_at(rng.derive_seed(3, 0), np.arange(20000))
        assert abs(z.mean()) < 0.03
        assert abs(z.std() - 1.0) < 0.03


class TestBackendAgreement:
    def test_jump_ensemble_identical(self):
        h, a_ops = _decay()
        psi0 = np.array([0, 1], dtype=complex)
        for args in [(1e-3, 500, 64, 11, 50), (2e-3, 301, 17, 12, 7)]:
            dt, n_steps, n_traj, seed, stride = args
            out_p = _pure.jump_ensemble(h, a_ops, psi0, dt, n_steps, n_traj, np.uint64(seed), stride)
            out_c = core.jump_ensemble(h, a_ops, psi0, dt, n_steps, n_traj, np.uint64(seed), stride)
            assert np.allclose(out_p[0], out_c[0], atol=1e-12, rtol=0)
            assert np.allclose(out_p[1], out_c[1], atol=1e-12, rtol=0)
            assert np.array_equal(out_p[2], out_c[2], equal_nan=True)
            assert np.array_equal(out_p[3], out_c[3])

    def test_jump_ensemble_multichannel(self):
        h, a_ops = _driven_three_level()
        psi0 = np.array([0, 0, 1], dtype=complex)
        out_p = _pure.jump_ensemble(h, a_ops, psi0, 1e-3, 400, 40, np.uint64(5), 40)
        out_c = core.jump_ensemble(h, a_ops, psi0, 1e-3, 400, 40, np.uint64(5), 40)
        assert np.allclose(out_p[0], out_c[0], atol=1e-12, rtol=0)
        assert np.array_equal(out_p[2], out_c[2], equal_nan=True)

    def test_jump_single_identical(self):
        h, a_ops = _driven_three_level()
        psi0 = np.array([0, 0, 1], dtype=complex)
        seed = rng.derive_seed(99, 0)
        sp = _pure.jump_single(h, a_ops, psi0, 1e-3, 800, seed, 8)
        sc = core.jump_single(h, a_ops, psi0, 1e-3, 800, seed, 8)
        assert np.allclose(sp[0], sc[0], atol=1e-13, rtol=0)
        assert np.allclose(sp[1], sc[1], atol=1e-12, rtol=0)
        assert np.array_equal(sp[2], sc[2])
        assert np.array_equal(sp[3], sc[3])

    def test_first_jump_times_identical(self):
        h, a_ops = _decay()
        psi0 = np.array([0, 1], dtype=complex)
        fp = _pure.first_jump_times(h, a_ops, psi0, 1e-3, 5000, 500, np.uint64(5))
        fc = core.first_jump_times(h, a_ops, psi0, 1e-3, 5000, 500, np.uint64(5))
        assert np.array_equal(fp, fc, equal_nan=True)

    def test_diffusion_close(self):
        # libm cos/log may differ from numpy in the last ulp, so the
        # diffusion paths agree only to ~1e-12 rather than bitwise
        h, a_ops = _decay()
        psi0 = np.array([0, 1], dtype=complex)
        dp = _pure.diffusion_ensemble(h, a_ops[0], psi0, 1e-3, 500, 32, np.uint64(8), 50)
        dc = core.diffusion_ensemble(h, a_ops[0], psi0, 1e-3, 500, 32, np.uint64(8), 50)
        assert np.allclose(dp[0], dc[0], atol=1e-10, rtol=0)
        sp = _pure.diffusion_single(h, a_ops[0], psi0, 1e-3, 500, rng.derive_seed(4, 0), 50)
        sc = core.diffusion_single(h, a_ops[0], psi0, 1e-3, 500, rng.derive_seed(4, 0), 50)
        assert np.allclose(sp, sc, atol=1e-10, rtol=0)


class TestBackendSelection:
    def test_env_override_selects_pure(self):
        import subprocess
        import sys

        code = (
            "import os; os.environ['QSINF_PURE_PYTHON']='1'; "
            "from qsinf import _kernels; print(_kernels.backend_name())"
        )
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, check=True
        )
        assert out.stdout.strip() == "pure"

    def test_default_is_compiled_when_available(self):
        from qsinf import _kernels

        assert _kernels.backend_name() in ("compiled", "pure")
