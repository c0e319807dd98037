import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from twistuntwist import closed_forms as cf
from twistuntwist import finite_range as fr
from twistuntwist.errors import DomainError


def naive_knn(n, k):
    v = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            d = min(abs(i - j), n - abs(i - j))
            if 0 < d <= k:
                v[i, j] = 1
    return v


class TestCoupling:
    def test_full_range_odd_ring(self):
        v = fr.coupling_knn(9, 4)
        assert np.all(v.values.sum(axis=1) == 8)

    @pytest.mark.parametrize("n,k", [(12, 3), (7, 1), (20, 9)])
    def test_matches_double_loop(self, n, k):
        assert np.array_equal(fr.coupling_knn(n, k).values, naive_knn(n, k))
        assert fr.coupling_knn(n, k).interaction_range() == k

    def test_validation(self):
        with pytest.raises(DomainError):
            fr.coupling_knn(8, 4)
        with pytest.raises(ValueError):
            fr.CouplingMatrix(np.array([[0, 1], [0, 0]]))
        with pytest.raises(ValueError):
            fr.CouplingMatrix(np.eye(3))

    def test_inferred_range(self):
        rng = np.random.default_rng(0)
        v = fr.random_coupling(11, 3, rng)
        assert fr.CouplingMatrix(v.values).interaction_range() == 3
        assert np.all(v.values[v.values != 0] >= 0.5)


class TestDiagonal:
    @pytest.mark.parametrize("n,k", [(10, 2), (14, 3)])
    def test_aligned_energy(self, n, k):
        assert fr.hk_diagonal(fr.coupling_knn(n, k)).diag[0] == pytest.approx(n * k / 2)

    def test_single_flip(self):
        v = fr.coupling_knn(10, 3)
        diag = fr.hk_diagonal(v).diag
        for site in range(10):
            assert diag[1 << site] - diag[0] == pytest.approx(-v.values[site].sum())

    @pytest.mark.parametrize("n", [5, 9, 10])
    def test_uniform_is_jz2(self, n):
        diag = fr.hk_diagonal(fr.coupling_uniform(n)).diag
        m = fr.spin_signs(n).sum(axis=1) / 2
        assert np.allclose(diag, m**2 - n / 4)

    def test_memory_guard(self):
        with pytest.raises(MemoryError):
            fr.hk_diagonal(fr.coupling_knn(25, 2))


class TestEvolution:
    def test_trivial_evolutions(self):
        state = fr.rotate_y_product(fr.lattice_plus_state(6), 0.3)
        ham = fr.hk_diagonal(fr.coupling_knn(6, 2))
        assert np.allclose(fr.evolve_hk(state, ham, 0.0).amplitudes, state.amplitudes)
        assert np.allclose(fr.rotate_y_product(state, 0.0).amplitudes, state.amplitudes)
        back = fr.evolve_hk(fr.evolve_hk(state, ham, 0.7), ham, -0.7)
        assert np.max(np.abs(back.amplitudes - state.amplitudes)) < 1e-14

    def test_rotation_matches_dense_exponential(self):
        n = 3
        sy = np.array([[0, -1j], [1j, 0]])
        jy = sum(
            np.kron(np.kron(np.eye(2 ** (n - 1 - s)), sy / 2), np.eye(2**s)) for s in range(n)
        )
        assert np.allclose(fr.apply_jy(np.eye(2**n)[:, 5].astype(complex), n), jy[:, 5])
        state = fr.evolve_hk(fr.lattice_plus_state(n), fr.hk_diagonal(fr.coupling_uniform(n)), 0.4)
        expected = expm(-1j * 0.9 * jy) @ state.amplitudes
        assert np.allclose(fr.rotate_y_product(state, 0.9).amplitudes, expected)

    @given(a=st.floats(-3, 3), b=st.floats(-3, 3))
    @settings(max_examples=20, deadline=None)
    def test_rotation_group_law(self, a, b):
        state = fr.evolve_hk(fr.lattice_plus_state(5), fr.hk_diagonal(fr.coupling_knn(5, 1)), 0.3)
        two = fr.rotate_y_product(fr.rotate_y_product(state, a), b)
        assert np.allclose(two.amplitudes, fr.rotate_y_product(state, a + b).amplitudes, atol=1e-12)

    @pytest.mark.parametrize("n,k", [(6, 1), (8, 2), (10, 3), (10, 4)])
    def test_conjugation_identity(self, n, k):
        rng = np.random.default_rng(n + k)
        v = fr.random_coupling(n, k, rng)
        h = fr.hk_diagonal(v).diag
        z = fr.spin_signs(n).astype(float)
        chi = 0.37
        vec = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        for r in range(n):
            lhs = np.exp(1j * chi * h) * fr.apply_sigma_plus(np.exp(-1j * chi * h) * vec, n, r)
            phase = np.exp(1j * chi * (z @ v.values[r]))
            rhs = fr.apply_sigma_plus(phase * vec, n, r)
            assert np.max(np.abs(lhs - rhs)) < 1e-10


class TestSlope:
    @pytest.mark.parametrize("n,k", [(10, 1), (10, 3), (13, 4)])
    def test_knn_slope(self, n, k):
        chi = 0.29
        expected = n * k * math.sin(chi) * math.cos(chi) ** (2 * k - 1)
        assert fr.slope_closed_form(fr.coupling_knn(n, k), chi) == pytest.approx(expected, rel=1e-12)
        assert fr.slope_closed_form(fr.coupling_knn(n, k), 0.0) == 0

    def test_random_couplings_match_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(5, 11))
            k = int(rng.integers(1, (n - 1) // 2 + 1))
            v = fr.random_coupling(n, k, rng)
            chi = float(rng.uniform(0.05, 1.0))
            assert fr.slope_closed_form(v, chi) == pytest.approx(fr.brute_slope(v, chi), rel=1e-9)

    def test_knn_slope_argmax(self):
        n = 12
        grid = np.arange(1e-4, 1.2, 1e-4)
        for k in (1, 2, 3):
            v = fr.coupling_knn(n, k)
            values = [fr.slope_closed_form(v, c) for c in grid]
            best = grid[int(np.argmax(values))]
            assert abs(best - math.atan(math.sqrt(1 / (2 * k - 1)))) <= 1e-4


class TestErrorBrute:
    def test_minimal_value_example(self):
        chi = math.atan(1 / math.sqrt(3))
        rep = fr.error_brute(fr.coupling_knn(14, 2), -chi, chi)
        assert rep.error == pytest.approx(1 / (2 * 14 * 2 * 0.75**3), rel=1e-10)

    @pytest.mark.parametrize("n", [7, 9])
    def test_full_range_matches_all_to_all(self, n):
        rep = fr.error_brute(fr.coupling_knn(n, (n - 1) // 2), -0.3, 0.2)
        assert rep.error == pytest.approx(cf.two_param_error(n, -0.3, 0.2), rel=1e-9)

    def test_matches_closed_form(self):
        rng = np.random.default_rng(1)
        for k in (1, 2):
            a1, a2 = rng.uniform(-1, 1, 2)
            rep = fr.error_brute(fr.coupling_knn(10, k), a1, a2)
            assert rep.error == pytest.approx(cf.finite_range_error(10, k, a1, a2), rel=1e-9)

    def test_qfi_is_once_twisted_variance(self):
        v = fr.coupling_knn(10, 2)
        assert fr.error_brute(v, -0.4, 0.4).qfi == pytest.approx(fr.brute_qfi(v, 0.4), rel=1e-12)
