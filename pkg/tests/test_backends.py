import numpy as np
import pytest

from natgalore.kernels import get_backend

npk = get_backend("numpy")
nbk = get_backend("numba")


def spd(rng, k):
    a = rng.standard_normal((k, k))
    return a @ a.T + k * np.eye(k)


class TestBackendParity:
    def test_cholesky_matches(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            s = spd(rng, int(rng.integers(1, 12)))
            l_np, piv_np = npk.cholesky(s)
            l_nb, piv_nb = nbk.cholesky(s)
            assert piv_np == piv_nb == -1
            assert np.allclose(l_np, l_nb, atol=1e-13)

    def test_cholesky_failure_pivot_matches(self):
        s = np.array([[1.0, 2.0], [2.0, 1.0]])  # not positive definite
        _, piv_np = npk.cholesky(s)
        _, piv_nb = nbk.cholesky(s)
        assert piv_np == piv_nb == 1

    def test_solve_matches(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            k = int(rng.integers(1, 10))
            l_np, _ = npk.cholesky(spd(rng, k))
            y = rng.standard_normal(k)
            assert np.allclose(npk.solve_cho(l_np, y), nbk.solve_cho(l_np, y),
                               atol=1e-13)

    def test_mgs_matches(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            a = rng.standard_normal((16, 5))
            q_np, r_np = npk.mgs(a)
            q_nb, r_nb = nbk.mgs(a)
            assert np.allclose(q_np, q_nb, atol=1e-12)
            assert np.allclose(r_np, r_nb, atol=1e-12)

    def test_mgs_degenerate_column_matches(self):
        a = np.ones((6, 3))  # rank 1, two columns collapse
        q_np, r_np = npk.mgs(a)
        q_nb, r_nb = nbk.mgs(a)
        assert np.allclose(q_np, q_nb, atol=1e-12)
        assert np.allclose(r_np, r_nb, atol=1e-12)
        assert np.allclose(q_np.T @ q_np, np.eye(3), atol=1e-12)

    @pytest.mark.parametrize("eps_inside", [True, False])
    def test_adam_direction_matches(self, eps_inside):
        rng = np.random.default_rng(3)
        m_np = np.zeros((4, 4))
        v_np = np.zeros((4, 4))
        m_nb = np.zeros((4, 4))
        v_nb = np.zeros((4, 4))
        for t in range(1, 11):
            g = rng.standard_normal((4, 4))
            c1 = 1.0 - 0.9 ** t
            c2 = 1.0 - 0.999 ** t
            u_np = npk.adam_direction(m_np, v_np, g, 0.9, 0.999, 1e-8,
                                      c1, c2, eps_inside)
            u_nb = nbk.adam_direction(m_nb, v_nb, g, 0.9, 0.999, 1e-8,
                                      c1, c2, eps_inside)
            assert np.allclose(u_np, u_nb, atol=1e-14)
            assert np.allclose(m_np, m_nb, atol=1e-14)
            assert np.allclose(v_np, v_nb, atol=1e-14)


class TestBackendSelection:
    def test_env_selects_numpy(self):
        import subprocess
        import sys
        proc = subprocess.run(
            [sys.executable, "-c",
             "from natgalore.kernels import BACKEND; print(BACKEND)"],
            capture_output=True, text=True,
            env={"PATH": "/usr/bin:/bin", "NATGALORE_BACKEND": "numpy"},
        )
        assert proc.stdout.strip() == "numpy"

    def test_unknown_backend_rejected(self):
        with pytest.raises(Exception):
            get_backend("fortran")
