"""Content models built from game tags, player answers, or both.

All three are ridge regressions:

* Tags: one regression per player over game tag vectors, ``scores = T X_tags^T``.
* Questions: one regression per game over player answers, ``scores = X_q Q^T``.
* Tags x Questions: a single regression on the Kronecker pair features, with
  ``score(i, j) = x_tags(j)^T A x_q(i)``; solved in the eigenbases of the two
  Gram matrices so the ``nm x rs`` design is never formed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, DataError
from .linalg import PcaProjector, RidgeProblem, _as_float, ridge_solve, sym_eig

_logger = logging.getLogger(__name__)

DEFAULT_PCA_DIMS = 16


def _axis(x, attr, count, prefix):
    ids = getattr(x, attr, None)
    if ids is not None:
        return tuple(ids)
    return tuple(f"{prefix}{i}" for i in range(count))


def _check_lambda(lam):
    if not lam > 0:
        raise DataError("content models need lambda > 0")


def _columns_like(X, names, wanted, what):
    """Reorder the columns of ``X`` (labelled ``names``) to ``wanted``.

    Columns missing from ``X`` become zeros; extra columns are dropped.
    """
    if tuple(names) == tuple(wanted):
        return X
    pos = {name: j for j, name in enumerate(names)}
    shared = [w for w in wanted if w in pos]
    if not shared:
        raise AlignmentError(f"no {what} in common with the fitted model")
    extra = len(names) - len(shared)
    if extra:
        _logger.warning("dropping %d %s unseen during fitting", extra, what)
    out = np.zeros((X.shape[0], len(wanted)))
    for j, w in enumerate(wanted):
        if w in pos:
            out[:, j] = X[:, pos[w]]
    return out


@dataclass(frozen=True)
class PopularityStats:
    mu: np.ndarray
    sigma_dev: np.ndarray


def popularity_normalize(R):
    """Standardise each like column: ``(R[:, j] - mu_j) / sqrt(mu_j (1 - mu_j))``.

    Columns liked by nobody or by everyone become all zeros.
    """
    X = _as_float(R)
    mu = X.mean(axis=0)
    sigma = np.sqrt(np.clip(mu * (1.0 - mu), 0.0, None))
    live = (mu > 0) & (mu < 1)
    Z = np.zeros_like(X)
    Z[:, live] = (X[:, live] - mu[live]) / sigma[live]
    sigma = np.where(live, sigma, 0.0)
    return Z, PopularityStats(mu, sigma)


def _targets(R, popularity_free):
    if popularity_free:
        return popularity_normalize(R)[0]
    return _as_float(R)


def _game_design(X_tags, popularity_free, pca_dims):
    X = _as_float(X_tags)
    if not popularity_free:
        return X, None
    profile = PcaProjector(pca_dims).fit(X)
    return profile.transform(X), profile


# ----------------------------------------------------------------------- Tags


@dataclass(frozen=True, eq=False)
class TagsModel:
    """Per-player responses to game tags (``n x r``).

    ``profile`` is set for the popularity-free variant, in which case the
    columns of ``T`` are PCA profile axes rather than tags.
    """

    T: np.ndarray
    lam: float
    tag_names: tuple[str, ...]
    player_ids: tuple[str, ...] = ()
    profile: PcaProjector | None = None


def tags_fit(R, X_tags, lam: float, popularity_free=False, pca_dims=DEFAULT_PCA_DIMS) -> TagsModel:
    Y = _targets(R, popularity_free)
    X = _as_float(X_tags)
    if Y.shape[1] != X.shape[0]:
        raise DataError(f"like matrix has {Y.shape[1]} games but tag matrix has {X.shape[0]}")
    _check_lambda(lam)
    design, profile = _game_design(X, popularity_free, pca_dims)
    T = ridge_solve(RidgeProblem(design, Y.T, lam)).T
    return TagsModel(
        T, float(lam), _axis(X_tags, "tag_names", X.shape[1], "tag"),
        tuple(getattr(R, "player_ids", ())), profile,
    )


def tags_predict(model: TagsModel, X_tags_eval) -> np.ndarray:
    """Scores ``T X^T`` for any games, including ones never seen in training."""
    X = _as_float(X_tags_eval)
    names = getattr(X_tags_eval, "tag_names", None)
    if names is not None:
        X = _columns_like(X, names, model.tag_names, "tags")
    elif X.shape[1] != len(model.tag_names):
        raise AlignmentError("tag matrix width does not match the model")
    if model.profile is not None:
        X = model.profile.transform(X)
    return model.T @ X.T


# ------------------------------------------------------------------ Questions


@dataclass(frozen=True, eq=False)
class QuestionsModel:
    """Per-game responses to player answers (``m x s``)."""

    Q: np.ndarray
    lam: float
    question_ids: tuple[str, ...]
    game_ids: tuple[str, ...] = ()


def questions_fit(R, X_questions, lam: float, popularity_free=False) -> QuestionsModel:
    Y = _targets(R, popularity_free)
    X = _as_float(X_questions)
    if Y.shape[0] != X.shape[0]:
        raise DataError(f"like matrix has {Y.shape[0]} players but question matrix has {X.shape[0]}")
    _check_lambda(lam)
    Q = ridge_solve(RidgeProblem(X, Y, lam)).T
    return QuestionsModel(
        Q, float(lam), _axis(X_questions, "question_ids", X.shape[1], "question"),
        tuple(getattr(R, "game_ids", ())),
    )


def questions_predict(model: QuestionsModel, X_questions_eval) -> np.ndarray:
    """Scores ``X Q^T`` for any players, including ones never seen in training."""
    X = _as_float(X_questions_eval)
    names = getattr(X_questions_eval, "question_ids", None)
    if names is not None:
        X = _columns_like(X, names, model.question_ids, "questions")
    elif X.shape[1] != len(model.question_ids):
        raise AlignmentError("question matrix width does not match the model")
    return X @ model.Q.T


# ---------------------------------------------------------- Tags x Questions


@dataclass(frozen=True, eq=False)
class InteractionModel:
    """Tag-by-question interaction strengths ``A`` (``r x s``)."""

    A: np.ndarray
    lam: float
    tag_names: tuple[str, ...]
    question_ids: tuple[str, ...]
    profile: PcaProjector | None = None


def kron_ridge_fit(R, X_questions, X_tags, lam: float, popularity_free=False,
                   pca_dims=DEFAULT_PCA_DIMS) -> InteractionModel:
    """Ridge regression on Kronecker pair features without forming them.

    With ``X_tags^T X_tags = V_t diag(a) V_t^T`` and
    ``X_q^T X_q = V_q diag(b) V_q^T`` the normal equations
    ``Gt A Gq + lam A = X_tags^T R^T X_q`` decouple in the eigenbases:
    ``A = V_t [(V_t^T C V_q) / (a b^T + lam)] V_q^T``.
    Cost is ``O(r^3 + s^3 + nm(r + s))`` time and ``O(rs + nm)`` memory.
    """
    Y = _targets(R, popularity_free)
    Xq = _as_float(X_questions)
    Xt = _as_float(X_tags)
    if Y.shape != (Xq.shape[0], Xt.shape[0]):
        raise DataError(
            f"like matrix {Y.shape} does not match {Xq.shape[0]} players x {Xt.shape[0]} games"
        )
    _check_lambda(lam)
    design, profile = _game_design(Xt, popularity_free, pca_dims)

    a, Vt = sym_eig(design.T @ design)
    b, Vq = sym_eig(Xq.T @ Xq)
    C = (design.T @ Y.T) @ Xq
    rotated = Vt.T @ C @ Vq
    A = Vt @ (rotated / (np.outer(a, b) + lam)) @ Vq.T
    return InteractionModel(
        A, float(lam), _axis(X_tags, "tag_names", Xt.shape[1], "tag"),
        _axis(X_questions, "question_ids", Xq.shape[1], "question"), profile,
    )


def _tag_rows(model, X_tags):
    X = _as_float(X_tags)
    names = getattr(X_tags, "tag_names", None)
    if names is not None:
        X = _columns_like(X, names, model.tag_names, "tags")
    if model.profile is not None:
        X = model.profile.transform(np.atleast_2d(X))
    return X


def kron_predict(model: InteractionModel, x_questions_row, x_tags_row) -> float:
    """Score of one (player, game) pair: ``x_tags^T A x_questions``."""
    xt = _tag_rows(model, np.atleast_2d(np.asarray(x_tags_row, dtype=float)))[0]
    xq = np.asarray(x_questions_row, dtype=float)
    return float(xt @ model.A @ xq)


def kron_scores(model: InteractionModel, X_questions_eval, X_tags_eval) -> np.ndarray:
    """Player-by-game score matrix for arbitrary (possibly all new) players and games."""
    Xq = _as_float(X_questions_eval)
    names = getattr(X_questions_eval, "question_ids", None)
    if names is not None:
        Xq = _columns_like(Xq, names, model.question_ids, "questions")
    Xt = _tag_rows(model, X_tags_eval)
    return Xq @ model.A.T @ Xt.T
