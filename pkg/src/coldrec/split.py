"""Four-setting cold-start split.

Games and players are each divided into train and test parts. The
validation sets are

1. held-out likes of known players on known games (players keep a few seed likes),
2. known players on new games,
3. new players on known games,
4. new players on new games.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, GameLikeMatrix, _index_of, _read_rows, _write_rows, LIKES_HEADER
from .errors import DataError

_logger = logging.getLogger(__name__)

SETTINGS = (1, 2, 3, 4)

MODEL_KINDS = ("Random", "MVN", "kNN", "SVD", "Tags", "Questions", "TagsXQuestions")

_CAPABILITIES = {
    "Random": frozenset(SETTINGS),
    "MVN": frozenset({1}),
    "kNN": frozenset({1}),
    "SVD": frozenset({1}),
    "Tags": frozenset({1, 2}),
    "Questions": frozenset({1, 3}),
    "TagsXQuestions": frozenset(SETTINGS),
}


def capability_matrix(model_kind: str) -> frozenset[int]:
    """Settings in which a model kind can score pairs.

    A model generalises only where it has learned a representation of both
    the player and the game.
    """
    try:
        return _CAPABILITIES[model_kind]
    except KeyError:
        raise ValueError(f"unknown model kind {model_kind!r}; expected one of {MODEL_KINDS}") from None


@dataclass(frozen=True)
class SplitConfig:
    test_game_fraction: float = 0.25
    test_player_fraction: float = 0.25
    setting1_player_fraction: float = 0.20
    seed_likes_per_player: int = 3
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("test_game_fraction", "test_player_fraction", "setting1_player_fraction"):
            if not 0 < getattr(self, name) < 1:
                raise DataError(f"{name} must lie in (0, 1)")
        if self.seed_likes_per_player < 1:
            raise DataError("seed_likes_per_player must be positive")


@dataclass(frozen=True, eq=False)
class SplitBundle:
    """Training matrix, the four validation like-sets and the axis partitions."""

    train_likes: GameLikeMatrix
    validation: dict  # setting -> frozenset of (player_id, game_id)
    train_game_ids: tuple[str, ...]
    test_game_ids: tuple[str, ...]
    train_player_ids: tuple[str, ...]
    test_player_ids: tuple[str, ...]
    setting1_player_ids: tuple[str, ...]
    config: SplitConfig

    @property
    def validation_s1(self):
        return self.validation[1]

    @property
    def validation_s2(self):
        return self.validation[2]

    @property
    def validation_s3(self):
        return self.validation[3]

    @property
    def validation_s4(self):
        return self.validation[4]

    def axes(self, setting: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
        """(player_ids, game_ids) spanned by a setting's validation set."""
        players = self.train_player_ids if setting in (1, 2) else self.test_player_ids
        games = self.train_game_ids if setting in (1, 3) else self.test_game_ids
        return players, games

    def __eq__(self, other):
        if not isinstance(other, SplitBundle):
            return NotImplemented
        return (
            self.train_likes == other.train_likes
            and self.validation == other.validation
            and self.train_game_ids == other.train_game_ids
            and self.test_game_ids == other.test_game_ids
            and self.train_player_ids == other.train_player_ids
            and self.test_player_ids == other.test_player_ids
            and self.setting1_player_ids == other.setting1_player_ids
        )

    __hash__ = None


def _sample(rng, ids, count):
    picked = rng.choice(len(ids), size=count, replace=False)
    return tuple(sorted(ids[i] for i in picked))


def four_way_split(dataset: Dataset | GameLikeMatrix, config: SplitConfig | None = None) -> SplitBundle:
    """Partition a dataset into training likes and the four validation sets.

    Counts are floored. Setting-1 players are drawn from training players
    with more than ``seed_likes_per_player`` likes on training games; each
    keeps that many random seed likes in training and the rest of their
    training-game likes become Setting-1 validation.
    """
    config = config or SplitConfig()
    likes = dataset.likes if isinstance(dataset, Dataset) else dataset
    n, m = likes.n, likes.m
    if n < 4 or m < 4:
        raise DataError(f"need at least 4 x 4 likes to split, got {n} x {m}")

    n_test_games = math.floor(config.test_game_fraction * m)
    n_test_players = math.floor(config.test_player_fraction * n)
    if n_test_games == 0 or n_test_players == 0:
        raise DataError("test fractions round down to zero games or players")

    rng = np.random.default_rng(config.rng_seed)
    test_games = _sample(rng, likes.game_ids, n_test_games)
    test_players = _sample(rng, likes.player_ids, n_test_players)
    test_game_set, test_player_set = set(test_games), set(test_players)
    train_games = tuple(g for g in likes.game_ids if g not in test_game_set)
    train_players = tuple(p for p in likes.player_ids if p not in test_player_set)

    gidx, pidx = _index_of(likes.game_ids), _index_of(likes.player_ids)
    tg_cols = np.array([gidx[g] for g in train_games])
    R = likes.values
    train_block = R[np.ix_([pidx[p] for p in train_players], tg_cols)].copy()

    counts = train_block.sum(axis=1)
    eligible = [i for i, c in enumerate(counts) if c > config.seed_likes_per_player]
    if not eligible:
        raise DataError(
            f"no training player has more than {config.seed_likes_per_player} likes on training games"
        )
    n_s1 = math.floor(config.setting1_player_fraction * len(train_players))
    if n_s1 == 0:
        raise DataError("setting-1 player fraction rounds down to zero players")
    if n_s1 > len(eligible):
        _logger.warning(
            "only %d eligible setting-1 players (wanted %d); using all of them", len(eligible), n_s1
        )
        n_s1 = len(eligible)
    s1_rows = sorted(eligible[i] for i in rng.choice(len(eligible), size=n_s1, replace=False))

    validation_s1 = set()
    for row in s1_rows:
        liked = np.flatnonzero(train_block[row])
        seeds = set(rng.choice(liked, size=config.seed_likes_per_player, replace=False).tolist())
        for col in liked:
            if col not in seeds:
                train_block[row, col] = 0
                validation_s1.add((train_players[row], train_games[col]))

    def block_pairs(players, games):
        rows = [pidx[p] for p in players]
        cols = [gidx[g] for g in games]
        r, c = np.nonzero(R[np.ix_(rows, cols)])
        return frozenset((players[i], games[j]) for i, j in zip(r, c))

    validation = {
        1: frozenset(validation_s1),
        2: block_pairs(train_players, test_games),
        3: block_pairs(test_players, train_games),
        4: block_pairs(test_players, test_games),
    }
    return SplitBundle(
        train_likes=GameLikeMatrix(train_block, train_players, train_games),
        validation=validation,
        train_game_ids=train_games,
        test_game_ids=test_games,
        train_player_ids=train_players,
        test_player_ids=test_players,
        setting1_player_ids=tuple(train_players[i] for i in s1_rows),
        config=config,
    )


def group_by_player(pairs, game_axis) -> dict[str, list[int]]:
    """Validation pairs as player id -> sorted game indices on ``game_axis``."""
    gidx = _index_of(game_axis)
    out: dict[str, list[int]] = {}
    for p, g in pairs:
        out.setdefault(p, []).append(gidx[g])
    return {p: sorted(v) for p, v in sorted(out.items())}


# ---------------------------------------------------------------------- files

MANIFEST_VERSION = 1


def save_split(bundle: SplitBundle, directory) -> Path:
    """Write ``train_likes.csv``, ``validation_s{1..4}.csv`` and ``manifest.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    _write_rows(directory / "train_likes.csv", LIKES_HEADER, sorted(bundle.train_likes.pairs()))
    for s in SETTINGS:
        _write_rows(directory / f"validation_s{s}.csv", LIKES_HEADER, sorted(bundle.validation[s]))
    c = bundle.config
    manifest = {
        "format": "coldrec-split",
        "version": MANIFEST_VERSION,
        "rng_seed": c.rng_seed,
        "config": {
            "test_game_fraction": c.test_game_fraction,
            "test_player_fraction": c.test_player_fraction,
            "setting1_player_fraction": c.setting1_player_fraction,
            "seed_likes_per_player": c.seed_likes_per_player,
            "rng_seed": c.rng_seed,
        },
        "train_game_ids": list(bundle.train_game_ids),
        "test_game_ids": list(bundle.test_game_ids),
        "train_player_ids": list(bundle.train_player_ids),
        "test_player_ids": list(bundle.test_player_ids),
        "setting1_player_ids": list(bundle.setting1_player_ids),
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def load_split(directory) -> SplitBundle:
    directory = Path(directory)
    try:
        manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read split manifest in {directory}: {exc}") from exc
    if manifest.get("format") != "coldrec-split" or manifest.get("version") != MANIFEST_VERSION:
        raise DataError(f"{directory}/manifest.json is not a version-{MANIFEST_VERSION} split manifest")

    def pairs(name):
        return frozenset(tuple(f) for _, f in _read_rows(directory / name, LIKES_HEADER))

    train = GameLikeMatrix.from_pairs(
        pairs("train_likes.csv"), manifest["train_player_ids"], manifest["train_game_ids"]
    )
    return SplitBundle(
        train_likes=train,
        validation={s: pairs(f"validation_s{s}.csv") for s in SETTINGS},
        train_game_ids=tuple(manifest["train_game_ids"]),
        test_game_ids=tuple(manifest["test_game_ids"]),
        train_player_ids=tuple(manifest["train_player_ids"]),
        test_player_ids=tuple(manifest["test_player_ids"]),
        setting1_player_ids=tuple(manifest["setting1_player_ids"]),
        config=SplitConfig(**manifest["config"]),
    )
