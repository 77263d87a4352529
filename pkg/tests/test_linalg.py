import numpy as np
import pytest
from scipy import linalg as sla
from scipy import stats

from mixpost.linalg import (
    generalized_max_eigenvalue, matrix_exp_sym, matrix_log, matrix_sqrt, sample_unit_sphere,
    sample_unit_symmetric, sym_eig, symmetric_basis_coords, as_spd,
)
from conftest import random_spd


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


class TestSymEig:
    def test_identity(self):
        lam, Q = sym_eig(np.eye(2))
        np.testing.assert_allclose(lam, [1, 1])
        np.testing.assert_allclose(Q @ Q.T, np.eye(2), atol=1e-12)

    def test_diagonal_descending(self):
        lam, Q = sym_eig(np.diag([1.0, 3.0]))
        np.testing.assert_allclose(lam, [3, 1])
        np.testing.assert_allclose(np.abs(Q), [[0, 1], [1, 0]], atol=1e-12)

    def test_reconstruction(self, rng):
        B = rng.standard_normal((5, 5))
        S = B + B.T
        lam, Q = sym_eig(S)
        assert np.all(np.diff(lam) <= 0)
        assert np.linalg.norm(Q @ np.diag(lam) @ Q.T - S) <= 1e-9 * np.linalg.norm(S)
        np.testing.assert_allclose(Q.T @ Q, np.eye(5), atol=1e-10)


class TestSpectralFunctions:
    def test_log_identity(self):
        np.testing.assert_array_equal(matrix_log(np.eye(3)), np.zeros((3, 3)))

    def test_log_diagonal(self):
        np.testing.assert_allclose(matrix_log(np.diag([np.e, np.e**2])), np.diag([1.0, 2.0]), atol=1e-14)

    def test_sqrt_diagonal(self):
        np.testing.assert_allclose(matrix_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
        np.testing.assert_allclose(matrix_sqrt(np.eye(4)), np.eye(4))

    def test_log_matches_scipy(self, rng):
        S = random_spd(rng, 4)
        np.testing.assert_allclose(matrix_log(S), sla.logm(S).real, atol=1e-10)
        assert _rel(sla.expm(matrix_log(S)), S) < 1e-8

    def test_roundtrips_many(self, rng):
        # exp(log S) and sqrt(S)^2 on ill-conditioned matrices, d = 1..10
        for _ in range(1000):
            d = int(rng.integers(1, 11))
            S = random_spd(rng, d, cond=10 ** rng.uniform(0, 6))
            assert _rel(matrix_exp_sym(matrix_log(S)), S) < 1e-8
            R = matrix_sqrt(S)
            assert _rel(R @ R, S) < 1e-8

    def test_exp_matches_scipy(self, rng):
        B = rng.standard_normal((4, 4))
        A = (B + B.T) / 2
        np.testing.assert_allclose(matrix_exp_sym(A), sla.expm(A), rtol=1e-10)

    def test_conjugation_equivariance(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        D = np.diag(rng.uniform(0.1, 5, size=4))
        np.testing.assert_allclose(matrix_log(Q @ D @ Q.T), Q @ matrix_log(D) @ Q.T, atol=1e-9)

    def test_batched(self, rng):
        S = np.stack([random_spd(rng, 3) for _ in range(5)])
        L = matrix_log(S)
        for k in range(5):
            np.testing.assert_allclose(L[k], matrix_log(S[k]), atol=1e-13)

    def test_floor_keeps_log_finite(self):
        S = np.diag([1.0, 0.0])
        assert np.all(np.isfinite(matrix_log(S)))
        assert matrix_log(S)[1, 1] == pytest.approx(np.log(1e-12))

    def test_nonsymmetric_rejected(self):
        with pytest.raises(ValueError):
            as_spd([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(ValueError):
            as_spd([[1.0, 0.0], [0.0, -1.0]])


class TestSampling:
    def test_sphere_d1(self, rng):
        v = sample_unit_sphere(1, rng, size=10000)
        assert set(np.unique(v)) == {-1.0, 1.0}
        assert abs((v > 0).mean() - 0.5) < 3 * 0.5 / 100

    def test_sphere_norm_and_mean(self, rng):
        v = sample_unit_sphere(3, rng, size=100000)
        np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-12)
        # each coordinate has variance 1/3 on S^2
        se = np.sqrt(1 / 3 / v.shape[0])
        assert np.all(np.abs(v.mean(axis=0)) < 3 * se)

    def test_single_draw_shape(self, rng):
        assert sample_unit_sphere(4, rng).shape == (4,)
        assert sample_unit_symmetric(3, rng).shape == (3, 3)

    def test_symmetric_d1(self, rng):
        A = sample_unit_symmetric(1, rng, size=100)
        assert set(np.unique(A)) <= {-1.0, 1.0}

    def test_symmetric_norm_exact_symmetry(self, rng):
        A = sample_unit_symmetric(4, rng, size=500)
        np.testing.assert_array_equal(A, np.swapaxes(A, 1, 2))
        np.testing.assert_allclose(np.sqrt(np.einsum("nij,nij->n", A, A)), 1.0, atol=1e-12)

    def test_symmetric_uniform_on_sphere(self, rng):
        # coordinates in an orthonormal basis of S_3 (dimension m = 6) are
        # uniform on S^5: mean zero, and c_1^2 ~ Beta(1/2, (m-1)/2)
        n = 100000
        C = symmetric_basis_coords(sample_unit_symmetric(3, rng, size=n))
        m = C.shape[1]
        assert m == 6
        np.testing.assert_allclose(np.linalg.norm(C, axis=1), 1.0, atol=1e-12)
        se = np.sqrt(1 / m / n)
        assert np.all(np.abs(C.mean(axis=0)) < 3.5 * se)
        # chi-squared goodness of fit of squared direction cosines on
        # 20 equiprobable Beta bins, for a diagonal and an off-diagonal coordinate
        edges = stats.beta(0.5, (m - 1) / 2).ppf(np.linspace(0, 1, 21))
        for j in (0, 4):
            counts, _ = np.histogram(C[:, j] ** 2, bins=edges)
            assert stats.chisquare(counts).pvalue > 0.01


class TestGeneralizedEigenvalue:
    def test_trivial(self, rng):
        S = random_spd(rng, 3)
        assert generalized_max_eigenvalue(S, S) == pytest.approx(1.0)
        assert generalized_max_eigenvalue(2 * np.eye(3), np.eye(3)) == pytest.approx(2.0)

    def test_scipy_oracle(self, rng):
        S1, S2 = random_spd(rng, 3), random_spd(rng, 3)
        ref = sla.eigh(S1, S2, eigvals_only=True).max()
        assert generalized_max_eigenvalue(S1, S2) == pytest.approx(ref, rel=1e-10)

    def test_rayleigh_quotient_lower_bound(self, rng):
        S1, S2 = random_spd(rng, 3), random_spd(rng, 3)
        lam = generalized_max_eigenvalue(S1, S2)
        v = sample_unit_sphere(3, rng, size=100000)
        ratio = np.einsum("ni,ij,nj->n", v, S1, v) / np.einsum("ni,ij,nj->n", v, S2, v)
        assert ratio.max() <= lam * (1 + 1e-12)
        assert ratio.max() >= lam * (1 - 1e-3)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            generalized_max_eigenvalue(np.eye(2), np.eye(3))
