"""Numerical kernels shared by the models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DataError, NumericalError


def _as_float(x):
    values = getattr(x, "values", x)
    return np.asarray(values, dtype=float)


@dataclass(frozen=True, eq=False)
class RidgeProblem:
    X: np.ndarray
    Y: np.ndarray
    lam: float

    def __post_init__(self):
        X, Y = _as_float(self.X), _as_float(self.Y)
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.ndim != 2 or X.shape[0] != Y.shape[0]:
            raise DataError(f"ridge design {X.shape} and targets {Y.shape} do not align")
        if not self.lam >= 0:
            raise DataError("ridge lambda must be non-negative")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)


def solve_spd(gram, rhs, lam=0.0):
    """Solve ``(gram + lam I) W = rhs`` by Cholesky.

    Raises :class:`NumericalError` when the shifted Gram matrix is not
    positive definite.
    """
    A = np.array(gram, dtype=float, copy=True)
    A[np.diag_indices_from(A)] += lam
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
        out = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        hint = "; use a positive regularization lambda" if lam == 0 else ""
        raise NumericalError(f"ridge system is singular or non-finite{hint}") from exc
    if not np.all(np.isfinite(out)):
        raise NumericalError("ridge solution is not finite")
    return out


def ridge_solve(problem: RidgeProblem) -> np.ndarray:
    """Multi-target ridge regression.

    Returns the ``q x t`` matrix ``W`` minimising
    ``||Y - X W||_F^2 + lam ||W||_F^2``, i.e. ``(X^T X + lam I)^{-1} X^T Y``.
    """
    X, Y = problem.X, problem.Y
    return solve_spd(X.T @ X, X.T @ Y, problem.lam)


@dataclass(frozen=True, eq=False)
class Moments:
    """Sample mean vector and covariance matrix (1/n normalisation)."""

    mu: np.ndarray
    sigma: np.ndarray

    @property
    def m(self) -> int:
        return self.mu.shape[0]


def sample_moments(R) -> Moments:
    """Column means and maximum-likelihood covariance of ``R`` (n x m)."""
    X = _as_float(R)
    if X.shape[0] < 1:
        raise DataError("need at least one row")
    mu = X.mean(axis=0)
    centered = X - mu
    sigma = centered.T @ centered / X.shape[0]
    sigma = 0.5 * (sigma + sigma.T)
    return Moments(mu, sigma)


def correlation_from_cov(moments: Moments) -> np.ndarray:
    """Correlation matrix; zero-variance indices correlate 0 with everything else."""
    sigma = moments.sigma
    d = np.sqrt(np.clip(np.diag(sigma), 0.0, None))
    live = d > 0
    inv = np.zeros_like(d)
    inv[live] = 1.0 / d[live]
    corr = sigma * inv[:, None] * inv[None, :]
    np.clip(corr, -1.0, 1.0, out=corr)
    np.fill_diagonal(corr, 1.0)
    return corr


def sym_eig(G, tol=1e-10):
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending."""
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise DataError("sym_eig needs a square matrix")
    if not np.allclose(G, G.T, rtol=0.0, atol=tol * max(1.0, np.abs(G).max(initial=0.0))):
        raise DataError("sym_eig input is not symmetric")
    return np.linalg.eigh(0.5 * (G + G.T))


class PcaProjector:
    """Centre, project onto the leading principal axes, then unit-normalise rows.

    Fitted on one matrix and reusable on new rows with the same columns,
    which is how unseen games get a profile in the popularity-free pipeline.
    """

    def __init__(self, dims: int):
        if dims < 1:
            raise DataError("PCA dims must be positive")
        self.dims = dims
        self.mean_ = None
        self.components_ = None

    def fit(self, X):
        X = _as_float(X)
        if self.dims > min(X.shape):
            raise DataError(f"PCA dims {self.dims} exceeds min{X.shape}")
        self.mean_ = X.mean(axis=0)
        _, _, vt = np.linalg.svd(X - self.mean_, full_matrices=False)
        # sign convention: largest-magnitude loading of each axis is positive
        flip = np.sign(vt[np.arange(vt.shape[0]), np.abs(vt).argmax(axis=1)])
        flip[flip == 0] = 1.0
        self.components_ = (vt * flip[:, None])[: self.dims]
        return self

    def transform(self, X, normalize=True):
        proj = (_as_float(X) - self.mean_) @ self.components_.T
        if not normalize:
            return proj
        norms = np.linalg.norm(proj, axis=1)
        scale = np.abs(proj).max(initial=0.0)
        live = norms > 1e-12 * max(scale, 1.0)
        out = np.zeros_like(proj)
        out[live] = proj[live] / norms[live, None]
        return out


def pca_project(X, dims: int) -> np.ndarray:
    """Project rows of ``X`` onto ``dims`` principal components with unit-norm rows."""
    return PcaProjector(dims).fit(X).transform(X)
