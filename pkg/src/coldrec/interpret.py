"""Read the fitted coefficients back as ranked, named lists."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .cf import MvnModel
from .content import InteractionModel, QuestionsModel, TagsModel
from .errors import DataError
from .linalg import correlation_from_cov

_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InterpretationReport:
    """Named strengths for one subject, strongest first.

    ``rank_by`` is ``"value"`` (signed, descending) or ``"magnitude"``
    (absolute value, descending; used for the global interaction list).
    Names are strings, or ``(tag, question)`` pairs for global interactions.
    """

    subject: str
    kind: str
    entries: tuple
    rank_by: str = "value"

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "kind": self.kind,
            "rank_by": self.rank_by,
            "entries": [
                {"name": list(name) if isinstance(name, tuple) else name, "strength": strength}
                for name, strength in self.entries
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = [f"{self.subject} ({self.kind})"]
        for name, strength in self.entries:
            label = " x ".join(name) if isinstance(name, tuple) else name
            lines.append(f"  {label:<40s} {strength:+.4f}")
        if not self.entries:
            lines.append("  (no entries)")
        return "\n".join(lines)


def _label(name):
    return " x ".join(name) if isinstance(name, tuple) else name


def _top(names, strengths, top_k, magnitude=False):
    if top_k < 1:
        raise DataError("top_k must be positive")
    key = np.abs(strengths) if magnitude else strengths
    # descending strength, ties alphabetical by name
    order = sorted(range(len(names)), key=lambda i: (-key[i], _label(names[i])))
    return tuple((names[i], float(strengths[i])) for i in order[:top_k])


def _position(ids, item, what):
    try:
        return list(ids).index(item)
    except ValueError:
        raise DataError(f"unknown {what} {item!r}") from None


def _axis(ids, count, prefix):
    return tuple(ids) if ids else tuple(f"{prefix}{i}" for i in range(count))


def top_correlated_games(model: MvnModel, game: str, top_k: int = 4) -> InterpretationReport:
    """Games most positively correlated with ``game`` (itself excluded)."""
    ids = _axis(model.game_ids, model.mu.shape[0], "")
    j = _position(ids, game, "game")
    if model.sigma[j, j] <= 0:
        _logger.warning("game %s has zero variance; no correlations to report", game)
        return InterpretationReport(game, "correlated_games", ())
    corr = model.sigma if model.use_correlation else correlation_from_cov(model.moments)
    others = [i for i in range(len(ids)) if i != j]
    entries = _top([ids[i] for i in others], corr[j, others], top_k)
    return InterpretationReport(game, "correlated_games", entries)


def top_tag_responses(model: TagsModel, player: str, top_k: int = 4) -> InterpretationReport:
    """Tags a player responds to most strongly."""
    if model.profile is not None:
        raise DataError("tag responses are undefined for the PCA-profile variant")
    ids = _axis(model.player_ids, model.T.shape[0], "")
    i = _position(ids, player, "player")
    return InterpretationReport(player, "tag_response", _top(list(model.tag_names), model.T[i], top_k))


def top_question_responses(model: QuestionsModel, game: str, top_k: int = 4) -> InterpretationReport:
    """Answers that most strongly predict liking a game."""
    ids = _axis(model.game_ids, model.Q.shape[0], "")
    j = _position(ids, game, "game")
    return InterpretationReport(
        game, "question_response", _top(list(model.question_ids), model.Q[j], top_k)
    )


def top_interactions(model: InteractionModel, tag: str | None = None, top_k: int = 4) -> InterpretationReport:
    """Strongest tag x question interactions.

    For a single ``tag`` the questions are ranked by signed strength. Without
    a tag all ``r * s`` pairs are ranked by absolute strength, since strong
    negative interactions are as informative as positive ones.
    """
    if model.profile is not None:
        raise DataError("interactions are undefined for the PCA-profile variant")
    if tag is not None:
        t = _position(model.tag_names, tag, "tag")
        entries = _top(list(model.question_ids), model.A[t], top_k)
        return InterpretationReport(tag, "interaction_pairs", entries)
    names = [(t, q) for t in model.tag_names for q in model.question_ids]
    entries = _top(names, model.A.ravel(), top_k, magnitude=True)
    return InterpretationReport("global", "interaction_pairs", entries, rank_by="magnitude")
