import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coldrec.errors import DataError, NumericalError
from coldrec.linalg import (
    Moments,
    PcaProjector,
    RidgeProblem,
    correlation_from_cov,
    pca_project,
    ridge_solve,
    sample_moments,
    sym_eig,
)


def ridge_objective(X, Y, W, lam):
    return np.sum((Y - X @ W) ** 2) + lam * np.sum(W**2)


class TestRidge:
    def test_identity_design_halves_target(self):
        y = np.array([2.0, -4.0, 6.0])
        w = ridge_solve(RidgeProblem(np.eye(3), y, 1.0))
        np.testing.assert_allclose(w[:, 0], y / 2)

    def test_huge_lambda_shrinks_to_zero(self, rng):
        X, Y = rng.normal(size=(15, 4)), rng.normal(size=(15, 2))
        W = ridge_solve(RidgeProblem(X, Y, 1e12))
        assert np.abs(W).max() <= 1e-9 * np.abs(X.T @ Y).max()

    def test_matches_explicit_inverse(self, rng):
        X, Y = rng.normal(size=(20, 5)), rng.normal(size=(20, 3))
        oracle = np.linalg.inv(X.T @ X + 0.5 * np.eye(5)) @ X.T @ Y
        np.testing.assert_allclose(ridge_solve(RidgeProblem(X, Y, 0.5)), oracle, atol=1e-10, rtol=0)

    def test_normal_equation_residual(self, rng):
        X, Y = rng.normal(size=(30, 6)), rng.normal(size=(30, 4))
        W = ridge_solve(RidgeProblem(X, Y, 2.0))
        resid = (X.T @ X + 2.0 * np.eye(6)) @ W - X.T @ Y
        assert np.abs(resid).max() <= 1e-8 * (1 + np.abs(X.T @ Y).max())

    def test_singular_without_regularization(self):
        X = np.array([[1.0, 1.0], [2.0, 2.0]])
        with pytest.raises(NumericalError, match="positive"):
            ridge_solve(RidgeProblem(X, np.ones(2), 0.0))

    def test_negative_lambda_rejected(self):
        with pytest.raises(DataError):
            RidgeProblem(np.eye(2), np.ones(2), -1.0)

    def test_columns_independent(self, rng):
        X, Y = rng.normal(size=(12, 3)), rng.normal(size=(12, 4))
        W = ridge_solve(RidgeProblem(X, Y, 1.0))
        for t in range(4):
            np.testing.assert_allclose(W[:, t], ridge_solve(RidgeProblem(X, Y[:, t], 1.0))[:, 0], atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float64, (8, 3), elements=st.floats(-3, 3)),
    arrays(np.float64, (8, 2), elements=st.floats(-3, 3)),
    st.floats(0.1, 10),
)
def test_ridge_solution_is_stationary(X, Y, lam):
    W = ridge_solve(RidgeProblem(X, Y, lam))
    base = ridge_objective(X, Y, W, lam)
    for idx in np.ndindex(W.shape):
        for step in (1e-4, -1e-4):
            Wp = W.copy()
            Wp[idx] += step
            assert ridge_objective(X, Y, Wp, lam) >= base - 1e-9 * (1 + base)


class TestMoments:
    def test_constant_columns(self):
        mo = sample_moments(np.array([[1, 0], [1, 0]]))
        np.testing.assert_array_equal(mo.mu, [1, 0])
        np.testing.assert_array_equal(mo.sigma, np.zeros((2, 2)))

    def test_anti_correlated_pair(self):
        mo = sample_moments(np.array([[1, 0], [0, 1]]))
        np.testing.assert_allclose(mo.mu, [0.5, 0.5])
        np.testing.assert_allclose(mo.sigma, [[0.25, -0.25], [-0.25, 0.25]])

    def test_single_row(self):
        assert not sample_moments(np.array([[1, 0, 1]])).sigma.any()

    def test_one_over_n_normalisation(self, rng):
        R = (rng.random((25, 6)) < 0.3).astype(float)
        np.testing.assert_allclose(sample_moments(R).sigma, np.cov(R, rowvar=False, bias=True), atol=1e-14)

    def test_positive_semidefinite(self, rng):
        R = (rng.random((10, 30)) < 0.2).astype(float)
        assert np.linalg.eigvalsh(sample_moments(R).sigma).min() >= -1e-10


class TestCorrelation:
    def test_diagonal_gives_identity(self):
        mo = Moments(np.zeros(3), np.diag([0.2, 0.5, 1.0]))
        np.testing.assert_array_equal(correlation_from_cov(mo), np.eye(3))

    def test_perfect_anticorrelation(self):
        mo = Moments(np.zeros(2), np.array([[0.25, -0.25], [-0.25, 0.25]]))
        np.testing.assert_allclose(correlation_from_cov(mo), [[1, -1], [-1, 1]])

    def test_zero_variance_convention(self):
        R = np.array([[1, 1, 0], [0, 1, 1], [1, 1, 1]])
        corr = correlation_from_cov(sample_moments(R))
        assert corr[1, 1] == 1.0
        assert not corr[1, [0, 2]].any() and not corr[[0, 2], 1].any()

    def test_bounds(self, rng):
        R = (rng.random((40, 15)) < 0.3).astype(float)
        corr = correlation_from_cov(sample_moments(R))
        assert corr.min() >= -1 - 1e-12 and corr.max() <= 1 + 1e-12
        np.testing.assert_array_equal(np.diag(corr), 1.0)


class TestSymEig:
    def test_identity(self):
        vals, _ = sym_eig(np.eye(4))
        np.testing.assert_allclose(vals, 1.0)

    def test_diagonal(self):
        vals, vecs = sym_eig(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(vals, [1.0, 3.0])
        np.testing.assert_allclose(np.abs(vecs), [[0, 1], [1, 0]])

    def test_random_reconstruction(self, rng):
        B = rng.normal(size=(6, 6))
        G = B + B.T
        vals, V = sym_eig(G)
        assert np.abs(G @ V - V * vals).max() <= 1e-8 * np.abs(G).max()
        assert np.abs(V.T @ V - np.eye(6)).max() <= 1e-8

    def test_asymmetric_rejected(self):
        with pytest.raises(DataError):
            sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestPca:
    def test_full_rank_is_rotation(self, rng):
        X = rng.normal(size=(10, 4))
        proj = PcaProjector(4).fit(X).transform(X, normalize=False)
        centered = X - X.mean(axis=0)
        d_before = np.linalg.norm(centered[:, None] - centered[None], axis=2)
        d_after = np.linalg.norm(proj[:, None] - proj[None], axis=2)
        np.testing.assert_allclose(d_after, d_before, atol=1e-10)

    def test_unit_rows(self, rng):
        X = (rng.random((30, 12)) < 0.3).astype(float)
        norms = np.linalg.norm(pca_project(X, 5), axis=1)
        live = norms > 0
        np.testing.assert_allclose(norms[live], 1.0)

    def test_rank_one_projects_to_signs(self):
        u = np.array([0.0, 1.0, 3.0, 4.0])  # mean 2, no row at the mean
        X = np.outer(u, [1.0, -2.0, 0.5])
        np.testing.assert_allclose(np.abs(pca_project(X, 1)), 1.0)

    def test_zero_rows_stay_zero(self):
        X = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
        out = pca_project(X, 2)
        np.testing.assert_array_equal(out[2], [0.0, 0.0])

    def test_dims_out_of_range(self):
        with pytest.raises(DataError):
            pca_project(np.ones((3, 5)), 4)
        with pytest.raises(DataError):
            pca_project(np.ones((3, 5)), 0)

    def test_qualitative_dimension(self, rng):
        X = (rng.random((60, 40)) < 0.2).astype(float)
        assert pca_project(X, 16).shape == (60, 16)
