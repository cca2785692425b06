import numpy as np
import pytest
import scipy.linalg

from epipca import ar1_toeplitz, inverse_psd, median_rho, sqrt_psd, temporal_weight
from epipca.errors import EmptyInput, InvalidRho, NotPsd, SingularMatrix


class TestMedianRho:
    def test_odd_median(self):
        assert median_rho([0.2, 0.4, 0.6]) == 0.4

    def test_even_median_averages_middle(self):
        assert median_rho([0.2, 0.4, 0.6, 0.8]) == pytest.approx(0.5)

    def test_clamp_at_limit(self):
        assert median_rho([1.0]) == 0.999
        assert median_rho([-1.0]) == -0.999

    def test_empty(self):
        with pytest.raises(EmptyInput):
            median_rho([])

    def test_out_of_range(self):
        with pytest.raises(InvalidRho):
            median_rho([0.2, 1.5])


class TestToeplitz:
    def test_rho_zero_identity(self):
        assert np.array_equal(ar1_toeplitz(3, 0.0), np.eye(3))

    def test_explicit_values(self):
        expected = np.array([[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]])
        assert np.array_equal(ar1_toeplitz(3, 0.5), expected)

    def test_positive_definite_high_rho(self):
        T = ar1_toeplitz(50, 0.9)
        assert np.linalg.eigvalsh(T)[0] > 0

    def test_invalid_rho(self):
        with pytest.raises(InvalidRho):
            ar1_toeplitz(5, 1.0)
        with pytest.raises(InvalidRho):
            ar1_toeplitz(5, -1.2)

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            ar1_toeplitz(0, 0.5)


class TestSqrtInverse:
    def test_identity(self):
        assert np.allclose(sqrt_psd(np.eye(4)), np.eye(4), atol=1e-14)
        assert np.allclose(inverse_psd(np.eye(4)), np.eye(4), atol=1e-14)

    def test_diagonal(self):
        assert np.allclose(sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
        assert np.allclose(inverse_psd(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))

    def test_multiply_back(self):
        T = ar1_toeplitz(20, 0.7)
        omega = sqrt_psd(T)
        assert np.linalg.norm(omega @ omega - T) < 1e-8
        omega_inv = inverse_psd(omega)
        assert np.linalg.norm(omega @ omega_inv - np.eye(20)) < 1e-8

    def test_not_psd(self):
        with pytest.raises(NotPsd):
            sqrt_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))  # eigenvalues 3, -1

    def test_singular(self):
        with pytest.raises(SingularMatrix):
            inverse_psd(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_non_symmetric_rejected(self):
        with pytest.raises(ValueError):
            sqrt_psd(np.array([[1.0, 0.4], [0.0, 1.0]]))


class TestTemporalWeight:
    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 13, 21, 34, 55, 64])
    @pytest.mark.parametrize("rho", [-0.9, -0.5, 0.0, 0.5, 0.9, 0.99])
    def test_grid_invariants(self, n, rho):
        tw = temporal_weight(n, rho)
        assert np.linalg.eigvalsh(tw.T)[0] > 0
        assert np.array_equal(tw.omega, tw.omega.T)
        assert np.linalg.norm(tw.omega @ tw.omega - tw.T) < 1e-8 * n
        assert np.linalg.norm(tw.omega @ tw.omega_inv - np.eye(n)) < 1e-8 * n
        assert np.abs(np.diag(tw.T) - 1.0).max() == 0.0

    def test_rho_zero_exact_identity(self):
        tw = temporal_weight(12, 0.0)
        assert np.array_equal(tw.omega, np.eye(12))
        assert np.array_equal(tw.omega_inv, np.eye(12))
        assert np.array_equal(tw.T, np.eye(12))

    def test_omega_eigenvalues_are_roots_of_T(self):
        tw = temporal_weight(15, 0.6)
        # independent solver on the Toeplitz matrix itself
        t_eigs = scipy.linalg.eigh(tw.T, eigvals_only=True)
        o_eigs = scipy.linalg.eigh(tw.omega, eigvals_only=True)
        assert np.abs(np.sort(o_eigs) - np.sqrt(np.sort(t_eigs))).max() < 1e-10

    def test_rho_clamped(self):
        tw = temporal_weight(5, 1.0)
        assert tw.rho == 0.999
