"""Collaborative-filtering models: conditional Gaussian, item kNN and ALS factorisation."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import DataError, NumericalError
from .linalg import Moments, _as_float, correlation_from_cov, sample_moments, solve_spd

_logger = logging.getLogger(__name__)


def _ids_of(R, attr):
    return tuple(getattr(R, attr, ()))


# ------------------------------------------------------------------------ MVN


@dataclass(frozen=True, eq=False)
class MvnModel:
    """Multivariate normal over like rows.

    With ``use_correlation`` the stored moments are the correlation matrix
    and a zero mean, which removes game popularity from the scores.
    """

    moments: Moments
    use_correlation: bool = False
    jitter: float = 1e-12
    game_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.jitter > 0:
            raise DataError("jitter must be positive")

    @property
    def mu(self):
        return self.moments.mu

    @property
    def sigma(self):
        return self.moments.sigma


def mvn_fit(R, use_correlation: bool = False, jitter: float | None = None) -> MvnModel:
    """Estimate the mean vector and covariance (or correlation) of the like rows.

    ``jitter`` defaults to ``1e-6 * max(diag(sigma))``; it is added to the
    diagonal of the conditioned block at prediction time.
    """
    X = _as_float(R)
    if X.shape[0] < 2:
        raise DataError("MVN needs at least two players")
    moments = sample_moments(X)
    if use_correlation:
        moments = Moments(np.zeros(X.shape[1]), correlation_from_cov(moments))
    if jitter is None:
        top = float(np.diag(moments.sigma).max(initial=0.0))
        jitter = 1e-6 * top if top > 0 else 1e-12
    return MvnModel(moments, use_correlation, jitter, _ids_of(R, "game_ids"))


def mvn_predict(model: MvnModel, liked) -> np.ndarray:
    """Conditional expectation of every game given that the ``liked`` games equal one.

    ``scores = mu + sigma[:, I] (sigma[I, I] + jitter I)^{-1} (1 - mu[I])``.
    Scores of the liked games themselves are returned too; rankers exclude them.
    """
    mu, sigma = model.mu, model.sigma
    idx = np.unique(np.asarray(list(liked), dtype=int))
    if idx.size == 0:
        return mu.copy()
    block = sigma[np.ix_(idx, idx)]
    coef = solve_spd(block, 1.0 - mu[idx], model.jitter)
    return mu + sigma[:, idx] @ coef


# ------------------------------------------------------------------------ kNN


def _column_similarity(X, centre):
    if centre:
        X = X - X.mean(axis=0)
    norms = np.sqrt((X * X).sum(axis=0))
    live = norms > 0
    inv = np.zeros_like(norms)
    inv[live] = 1.0 / norms[live]
    S = (X.T @ X) * inv[:, None] * inv[None, :]
    np.clip(S, -1.0, 1.0, out=S)
    np.fill_diagonal(S, 1.0)
    return 0.5 * (S + S.T)


@dataclass(frozen=True, eq=False)
class KnnModel:
    """Item-item similarity with a fixed neighbourhood size ``k``."""

    S: np.ndarray
    kind: Literal["cosine", "phi"] = "cosine"
    k: int | None = None
    game_ids: tuple[str, ...] = ()
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = self.S.shape[0]
        k = m if self.k is None else int(self.k)
        if not 1 <= k <= m:
            raise DataError(f"neighbourhood size must lie in 1..{m}")
        object.__setattr__(self, "k", k)
        if k == m:
            weights = self.S
        else:
            # stable sort on -S keeps the lower index first among ties
            order = np.argsort(-self.S, axis=1, kind="stable")[:, :k]
            weights = np.zeros_like(self.S)
            rows = np.arange(m)[:, None]
            weights[rows, order] = self.S[rows, order]
        object.__setattr__(self, "weights", weights)


def knn_similarity(R, kind: str = "cosine", k: int | None = None) -> KnnModel:
    """Cosine or phi (Pearson) similarity between the game columns of ``R``."""
    if kind in ("cos", "cosine"):
        kind, centre = "cosine", False
    elif kind == "phi":
        centre = True
    else:
        raise DataError(f"unknown similarity kind {kind!r}")
    S = _column_similarity(_as_float(R), centre)
    return KnnModel(S, kind, k, _ids_of(R, "game_ids"))


def knn_predict(model: KnnModel, liked_row) -> np.ndarray:
    """Sum of similarities from each game to the liked games among its ``k`` nearest.

    No normalising denominator; only the ordering matters.
    """
    return model.weights @ np.asarray(liked_row, dtype=float)


# ------------------------------------------------------------------------ SVD


@dataclass(frozen=True)
class AlsOptions:
    max_iters: int = 100
    rel_tol: float = 1e-4
    rng_seed: int = 0
    init_scale: float = 0.1

    def __post_init__(self):
        if self.max_iters < 1:
            raise DataError("max_iters must be >= 1")
        if not self.rel_tol > 0:
            raise DataError("rel_tol must be positive")


@dataclass(frozen=True, eq=False)
class SvdModel:
    """Latent factors with ``scores = P @ G.T``.

    ``objective_history`` holds the penalised loss at the start and after
    every half-step (P update, then G update).
    """

    P: np.ndarray
    G: np.ndarray
    lam: float
    player_ids: tuple[str, ...] = ()
    game_ids: tuple[str, ...] = ()
    objective_history: tuple[float, ...] = ()

    @property
    def k(self) -> int:
        return self.P.shape[1]


def als_objective(R, P, G, lam) -> float:
    resid = _as_float(R) - P @ G.T
    return float((resid * resid).sum() + lam * ((P * P).sum() + (G * G).sum()))


def svd_fit_als(R, k: int, lam: float, opts: AlsOptions | None = None) -> SvdModel:
    """Regularised matrix factorisation by alternating exact ridge updates.

    Each half-step solves every row at once: ``P = R G (G^T G + lam I)^{-1}``
    then ``G = R^T P (P^T P + lam I)^{-1}``. Stops when the relative
    objective decrease over a full iteration falls below ``opts.rel_tol``.
    ``lam = 0`` gives PureSVD.
    """
    opts = opts or AlsOptions()
    if k < 1:
        raise DataError("latent dimension must be >= 1")
    if lam < 0:
        raise DataError("lambda must be non-negative")
    X = _as_float(R)
    n, m = X.shape
    rng = np.random.default_rng(opts.rng_seed)
    P = rng.normal(0.0, opts.init_scale, size=(n, k))
    G = rng.normal(0.0, opts.init_scale, size=(m, k))

    history = [als_objective(X, P, G, lam)]
    floor = 1e-14 * max(float((X * X).sum()), 1.0)
    for it in range(opts.max_iters):
        prev = history[-1]
        try:
            P = solve_spd(G.T @ G, G.T @ X.T, lam).T
            history.append(als_objective(X, P, G, lam))
            G = solve_spd(P.T @ P, P.T @ X, lam).T
        except NumericalError as exc:
            raise NumericalError(
                f"ALS update {it + 1} failed: factor Gram matrix is singular; use lambda > 0"
            ) from exc
        cur = als_objective(X, P, G, lam)
        history.append(cur)
        if cur <= floor or (prev - cur) / max(prev, floor) < opts.rel_tol:
            break
    else:
        _logger.debug("ALS hit max_iters=%d", opts.max_iters)
    return SvdModel(P, G, float(lam), _ids_of(R, "player_ids"), _ids_of(R, "game_ids"), tuple(history))


def svd_predict(model: SvdModel, player_index: int, game_index: int) -> float:
    n, m = model.P.shape[0], model.G.shape[0]
    if not (0 <= player_index < n and 0 <= game_index < m):
        raise IndexError(f"index ({player_index}, {game_index}) outside {n} x {m} factors")
    return float(model.P[player_index] @ model.G[game_index])


def svd_scores(model: SvdModel) -> np.ndarray:
    """Full ``n x m`` score matrix."""
    return model.P @ model.G.T
