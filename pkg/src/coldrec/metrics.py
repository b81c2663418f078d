"""Ranking and top-N metrics (Precision@k, nDCG@k)."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

_logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RankedList:
    """Game indices best-first, with their scores and the excluded set."""

    order: np.ndarray
    scores: np.ndarray
    excluded: frozenset = frozenset()

    def __len__(self):
        return len(self.order)


def rank_games(scores, exclude=()) -> RankedList:
    """Sort games by descending score, ties by ascending index, after dropping ``exclude``.

    Infinite scores are allowed; NaN is not.
    """
    scores = np.asarray(scores, dtype=float)
    if np.isnan(scores).any():
        raise ValueError("scores contain NaN")
    excluded = frozenset(int(i) for i in exclude)
    keep = np.ones(scores.shape[0], dtype=bool)
    if excluded:
        keep[list(excluded)] = False
    candidates = np.flatnonzero(keep)
    # stable sort keeps ascending index among equal scores
    order = candidates[np.argsort(-scores[candidates], kind="stable")]
    return RankedList(order, scores[order], excluded)


def _hits(ranked: RankedList, liked, k):
    liked = np.fromiter((int(g) for g in liked), dtype=int)
    top = ranked.order[:k]
    return np.isin(top, liked)


def precision_at_k(ranked: RankedList, validation_likes, k: int = 20) -> float:
    """Fraction of the top ``k`` that are liked; the denominator is always ``k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(_hits(ranked, validation_likes, k).sum()) / k


def ndcg_at_k(ranked: RankedList, validation_likes, k: int | None = None) -> float:
    """Binary-gain nDCG over the first ``k`` positions (the whole list when ``k`` is None).

    Returns NaN when ``validation_likes`` is empty (the ideal DCG is zero).
    """
    liked = set(int(g) for g in validation_likes)
    if k is None:
        k = len(ranked)
    if k < 1:
        raise ValueError("k must be >= 1")
    if not liked:
        return math.nan
    hits = _hits(ranked, liked, k)
    discounts = 1.0 / np.log2(np.arange(2, hits.size + 2))
    dcg = float(discounts[hits].sum())
    ideal = float((1.0 / np.log2(np.arange(2, min(len(liked), k) + 2))).sum())
    return dcg / ideal


@dataclass
class MetricReport:
    """Macro-averaged metrics over the players that have validation likes."""

    precision_at_20: float
    ndcg_at_m: float
    per_player: dict[str, dict[str, float]] = field(default_factory=dict)
    counted_players: int = 0
    skipped_players: list[str] = field(default_factory=list)
    k_prec: int = 20

    def to_dict(self) -> dict:
        return {
            "precision_at_k": self.precision_at_20,
            "k_prec": self.k_prec,
            "ndcg_at_m": self.ndcg_at_m,
            "counted_players": self.counted_players,
            "skipped_players": list(self.skipped_players),
            "per_player": {p: dict(v) for p, v in sorted(self.per_player.items())},
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, **kwargs)


def evaluate_player_set(
    score_provider: Callable[[str], np.ndarray],
    validation: Mapping[str, Sequence[int]],
    exclusions: Mapping[str, Sequence[int]] | None = None,
    k_prec: int = 20,
) -> MetricReport:
    """Rank every validation player's candidates and average both metrics.

    Parameters
    ----------
    score_provider : callable
        Maps a player id to a score vector over the evaluation game axis.
    validation : mapping
        Player id to indices (on the evaluation axis) of held-out likes.
        Players with no held-out likes are not counted.
    exclusions : mapping, optional
        Player id to indices removed before ranking (known training likes).
    k_prec : int
        Cut-off for precision. nDCG always uses the full candidate list.
    """
    exclusions = exclusions or {}
    per_player = {}
    skipped = []
    for pid in sorted(validation):
        liked = set(int(g) for g in validation[pid])
        if not liked:
            continue
        scores = np.asarray(score_provider(pid), dtype=float)
        ranked = rank_games(scores, exclusions.get(pid, ()))
        if len(ranked) == 0:
            _logger.warning("player %s has no candidate games after exclusion; skipped", pid)
            skipped.append(pid)
            continue
        per_player[pid] = {
            "precision": precision_at_k(ranked, liked, k_prec),
            "ndcg": ndcg_at_k(ranked, liked, len(ranked)),
        }
    if per_player:
        prec = float(np.mean([v["precision"] for v in per_player.values()]))
        ndcg = float(np.mean([v["ndcg"] for v in per_player.values()]))
    else:
        prec = ndcg = math.nan
    return MetricReport(prec, ndcg, per_player, len(per_player), skipped, k_prec)
