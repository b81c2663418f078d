"""Core matrix types, CSV ingestion and the synthetic data generator.

Every matrix keeps its axis identifiers sorted lexicographically, so two
datasets built from the same rows in a different order are identical.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import AlignmentError, DataError, ParseError

_logger = logging.getLogger(__name__)

LIKES_HEADER = ("player_id", "game_id")
TAGS_HEADER = ("game_id", "tag")
QUESTIONS_HEADER = ("player_id", "question_id", "answer")

LIKERT_VALUES = (-2, -1, 0, 1, 2)


def _frozen(values, dtype):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _check_ids(ids, what):
    ids = tuple(str(i) for i in ids)
    if len(set(ids)) != len(ids):
        raise DataError(f"{what} contain duplicates")
    if list(ids) != sorted(ids):
        raise DataError(f"{what} must be sorted lexicographically")
    return ids


def _index_of(ids: Sequence[str]) -> dict[str, int]:
    return {k: i for i, k in enumerate(ids)}


@dataclass(frozen=True, eq=False)
class GameLikeMatrix:
    """Complete binary player-by-game like matrix.

    Parameters
    ----------
    values : array-like of shape (n, m)
        ``values[i, j] == 1`` iff player ``i`` likes game ``j``.
    player_ids, game_ids : sequence of str
        Unique, lexicographically sorted axis labels.
    """

    values: np.ndarray
    player_ids: tuple[str, ...]
    game_ids: tuple[str, ...]

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != 2:
            raise DataError("like matrix must be 2-D")
        if vals.size and not np.isin(vals, (0, 1)).all():
            raise DataError("like matrix entries must be 0 or 1")
        object.__setattr__(self, "values", _frozen(vals, np.uint8))
        object.__setattr__(self, "player_ids", _check_ids(self.player_ids, "player_ids"))
        object.__setattr__(self, "game_ids", _check_ids(self.game_ids, "game_ids"))
        if self.values.shape != (len(self.player_ids), len(self.game_ids)):
            raise DataError(
                f"like matrix shape {self.values.shape} does not match "
                f"{len(self.player_ids)} players x {len(self.game_ids)} games"
            )

    @property
    def n(self) -> int:
        return len(self.player_ids)

    @property
    def m(self) -> int:
        return len(self.game_ids)

    @property
    def density(self) -> float:
        return float(self.values.mean()) if self.values.size else 0.0

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], player_ids=None, game_ids=None):
        """Build a matrix from ``(player_id, game_id)`` pairs.

        Axes default to the sorted IDs seen in ``pairs``; explicit axes must
        cover every pair.
        """
        pairs = list(pairs)
        if player_ids is None:
            player_ids = sorted({p for p, _ in pairs})
        if game_ids is None:
            game_ids = sorted({g for _, g in pairs})
        pidx, gidx = _index_of(player_ids), _index_of(game_ids)
        vals = np.zeros((len(player_ids), len(game_ids)), dtype=np.uint8)
        for p, g in pairs:
            try:
                vals[pidx[p], gidx[g]] = 1
            except KeyError as exc:
                raise AlignmentError(f"pair ({p}, {g}) is outside the given axes") from exc
        return cls(vals, tuple(player_ids), tuple(game_ids))

    def pairs(self) -> set[tuple[str, str]]:
        rows, cols = np.nonzero(self.values)
        return {(self.player_ids[i], self.game_ids[j]) for i, j in zip(rows, cols)}

    def subset(self, player_ids: Sequence[str], game_ids: Sequence[str]) -> GameLikeMatrix:
        pidx, gidx = _index_of(self.player_ids), _index_of(self.game_ids)
        try:
            rows = [pidx[p] for p in player_ids]
            cols = [gidx[g] for g in game_ids]
        except KeyError as exc:
            raise AlignmentError(f"unknown identifier {exc.args[0]!r}") from exc
        return GameLikeMatrix(self.values[np.ix_(rows, cols)], tuple(player_ids), tuple(game_ids))

    def __eq__(self, other):
        if not isinstance(other, GameLikeMatrix):
            return NotImplemented
        return (
            self.player_ids == other.player_ids
            and self.game_ids == other.game_ids
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GameFeatureMatrix:
    """Binary game-by-tag indicator matrix.

    ``untagged`` lists games that received an all-zero row because the tag
    source had nothing for them.
    """

    values: np.ndarray
    game_ids: tuple[str, ...]
    tag_names: tuple[str, ...]
    untagged: tuple[str, ...] = ()

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != 2:
            raise DataError("tag matrix must be 2-D")
        if vals.size and not np.isin(vals, (0, 1)).all():
            raise DataError("tag matrix entries must be 0 or 1")
        object.__setattr__(self, "values", _frozen(vals, np.uint8))
        object.__setattr__(self, "game_ids", _check_ids(self.game_ids, "game_ids"))
        object.__setattr__(self, "tag_names", _check_ids(self.tag_names, "tag_names"))
        object.__setattr__(self, "untagged", tuple(self.untagged))
        if self.values.shape != (len(self.game_ids), len(self.tag_names)):
            raise DataError("tag matrix shape does not match its axes")

    @property
    def m(self) -> int:
        return len(self.game_ids)

    @property
    def r(self) -> int:
        return len(self.tag_names)

    def subset(self, game_ids: Sequence[str]) -> GameFeatureMatrix:
        idx = _index_of(self.game_ids)
        try:
            rows = [idx[g] for g in game_ids]
        except KeyError as exc:
            raise AlignmentError(f"unknown game {exc.args[0]!r}") from exc
        keep = set(game_ids)
        return GameFeatureMatrix(
            self.values[rows], tuple(game_ids), self.tag_names,
            tuple(g for g in self.untagged if g in keep),
        )

    def __eq__(self, other):
        if not isinstance(other, GameFeatureMatrix):
            return NotImplemented
        return (
            self.game_ids == other.game_ids
            and self.tag_names == other.tag_names
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PlayerFeatureMatrix:
    """Player-by-question Likert answers on the centred scale -2..2."""

    values: np.ndarray
    player_ids: tuple[str, ...]
    question_ids: tuple[str, ...]

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != 2:
            raise DataError("question matrix must be 2-D")
        if vals.size and not np.isin(vals, LIKERT_VALUES).all():
            raise DataError("question answers must lie in {-2,-1,0,1,2}")
        object.__setattr__(self, "values", _frozen(vals, np.int8))
        object.__setattr__(self, "player_ids", _check_ids(self.player_ids, "player_ids"))
        object.__setattr__(self, "question_ids", _check_ids(self.question_ids, "question_ids"))
        if self.values.shape != (len(self.player_ids), len(self.question_ids)):
            raise DataError("question matrix shape does not match its axes")

    @property
    def n(self) -> int:
        return len(self.player_ids)

    @property
    def s(self) -> int:
        return len(self.question_ids)

    def subset(self, player_ids: Sequence[str]) -> PlayerFeatureMatrix:
        idx = _index_of(self.player_ids)
        try:
            rows = [idx[p] for p in player_ids]
        except KeyError as exc:
            raise AlignmentError(f"unknown player {exc.args[0]!r}") from exc
        return PlayerFeatureMatrix(self.values[rows], tuple(player_ids), self.question_ids)

    def __eq__(self, other):
        if not isinstance(other, PlayerFeatureMatrix):
            return NotImplemented
        return (
            self.player_ids == other.player_ids
            and self.question_ids == other.question_ids
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True)
class Dataset:
    """Likes plus aligned game and player features."""

    likes: GameLikeMatrix
    tags: GameFeatureMatrix
    questions: PlayerFeatureMatrix

    def __post_init__(self):
        if self.tags.game_ids != self.likes.game_ids:
            raise AlignmentError("tag rows are not aligned with like-matrix games")
        if self.questions.player_ids != self.likes.player_ids:
            raise AlignmentError("question rows are not aligned with like-matrix players")

    def subset(self, player_ids: Sequence[str], game_ids: Sequence[str]) -> Dataset:
        return Dataset(
            self.likes.subset(player_ids, game_ids),
            self.tags.subset(game_ids),
            self.questions.subset(player_ids),
        )


# --------------------------------------------------------------------- CSV io


def _read_rows(path, header):
    """Yield ``(line_number, fields)`` for the data rows of a simple CSV."""
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(path, 0, "file is empty")
    got = tuple(f.strip() for f in lines[0].lstrip("﻿").split(","))
    if got != header:
        raise ParseError(path, 1, f"expected header {','.join(header)!r}, got {lines[0]!r}")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if '"' in line:
            raise ParseError(path, lineno, "quoted fields are not supported")
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(header):
            raise ParseError(path, lineno, f"expected {len(header)} fields, got {len(fields)}")
        if not all(fields):
            raise ParseError(path, lineno, "empty field")
        yield lineno, fields


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            for value in row:
                if "," in str(value) or '"' in str(value):
                    raise DataError(f"identifier {value!r} cannot be written unquoted")
            fh.write(",".join(str(v) for v in row) + "\n")


def load_likes(path, player_ids=None, game_ids=None) -> GameLikeMatrix:
    """Read a ``player_id,game_id`` CSV into a :class:`GameLikeMatrix`.

    Duplicate rows collapse to a single like. ``player_ids``/``game_ids``
    fix the axes explicitly (needed to keep players or games with no likes).
    """
    pairs = [tuple(f) for _, f in _read_rows(path, LIKES_HEADER)]
    if not pairs and (player_ids is None or game_ids is None):
        raise ParseError(path, 0, "no likes in file")
    return GameLikeMatrix.from_pairs(pairs, player_ids, game_ids)


def save_likes(matrix: GameLikeMatrix, path) -> None:
    rows = sorted(matrix.pairs())
    _write_rows(path, LIKES_HEADER, rows)


def load_game_tags(path, game_ids=None) -> GameFeatureMatrix:
    """Read a long-format ``game_id,tag`` CSV into a binary tag matrix.

    If ``game_ids`` is given the rows are aligned to it: listed games without
    tags get all-zero rows (recorded in ``untagged``) and tagged games not in
    ``game_ids`` raise :class:`AlignmentError`.
    """
    pairs = {tuple(f) for _, f in _read_rows(path, TAGS_HEADER)}
    tag_names = sorted({t for _, t in pairs})
    if not tag_names:
        raise DataError(f"{path}: no tags")
    seen = sorted({g for g, _ in pairs})
    if game_ids is None:
        game_ids = seen
    gidx = _index_of(game_ids)
    unknown = [g for g in seen if g not in gidx]
    if unknown:
        raise AlignmentError(
            f"{path}: {len(unknown)} tagged games are not in the like matrix, e.g. {unknown[0]!r}"
        )
    tidx = _index_of(tag_names)
    vals = np.zeros((len(game_ids), len(tag_names)), dtype=np.uint8)
    for g, t in pairs:
        vals[gidx[g], tidx[t]] = 1
    seen_set = set(seen)
    untagged = tuple(g for g in game_ids if g not in seen_set)
    if untagged:
        _logger.warning("%d games have no tags and get all-zero rows", len(untagged))
    return GameFeatureMatrix(vals, tuple(game_ids), tuple(tag_names), untagged)


def save_game_tags(tags: GameFeatureMatrix, path) -> None:
    rows, cols = np.nonzero(tags.values)
    _write_rows(path, TAGS_HEADER, [(tags.game_ids[i], tags.tag_names[j]) for i, j in zip(rows, cols)])


def _detect_scale(answers, path):
    lo, hi = min(answers), max(answers)
    if lo >= -2 and hi <= 2 and lo <= 0:
        return 0
    if lo >= 1 and hi <= 5 and hi >= 3:
        return -3
    if lo >= 1 and hi <= 2:
        # only 1s and 2s: valid on both scales, read as centred
        _logger.warning("%s: answers only in {1, 2}; assuming the -2..2 scale", path)
        return 0
    raise ParseError(path, 0, f"answers span {lo}..{hi}, which fits neither -2..2 nor 1..5")


def load_player_questions(path, player_ids=None, scale="auto") -> PlayerFeatureMatrix:
    """Read ``player_id,question_id,answer`` rows into a Likert matrix.

    Parameters
    ----------
    path : path-like
        CSV file.
    player_ids : sequence of str, optional
        Row axis. Players without answers get all-zero (neutral) rows.
    scale : {"auto", "centered", "1-5"}
        Input answer scale. ``"1-5"`` answers are shifted by -3. ``"auto"``
        picks the scale from the range of values in the file.
    """
    records = []
    for lineno, (pid, qid, raw) in _read_rows(path, QUESTIONS_HEADER):
        try:
            answer = int(raw)
        except ValueError:
            raise ParseError(path, lineno, f"answer {raw!r} is not an integer") from None
        if not -2 <= answer <= 5:
            raise ParseError(path, lineno, f"answer {answer} outside both -2..2 and 1..5")
        records.append((lineno, pid, qid, answer))
    if not records:
        raise DataError(f"{path}: no question answers")

    if scale == "auto":
        shift = _detect_scale([r[3] for r in records], path)
    elif scale == "centered":
        shift = 0
    elif scale == "1-5":
        shift = -3
    else:
        raise ValueError(f"unknown scale {scale!r}")

    question_ids = sorted({r[2] for r in records})
    seen_players = sorted({r[1] for r in records})
    if player_ids is None:
        player_ids = seen_players
    pidx, qidx = _index_of(player_ids), _index_of(question_ids)
    vals = np.zeros((len(player_ids), len(question_ids)), dtype=np.int8)
    filled = {}
    for lineno, pid, qid, answer in records:
        value = answer + shift
        if value not in LIKERT_VALUES:
            raise ParseError(path, lineno, f"answer {answer} is out of range for the detected scale")
        if pid not in pidx:
            raise AlignmentError(f"{path}:{lineno}: player {pid!r} is not in the like matrix")
        key = (pid, qid)
        if filled.get(key, value) != value:
            raise ParseError(path, lineno, f"conflicting answers for {pid}/{qid}")
        filled[key] = value
        vals[pidx[pid], qidx[qid]] = value
    return PlayerFeatureMatrix(vals, tuple(player_ids), tuple(question_ids))


def save_player_questions(questions: PlayerFeatureMatrix, path) -> None:
    """Write every cell (centred scale), including neutral zeros."""
    rows = (
        (pid, qid, int(questions.values[i, j]))
        for i, pid in enumerate(questions.player_ids)
        for j, qid in enumerate(questions.question_ids)
    )
    _write_rows(path, QUESTIONS_HEADER, rows)


def load_dataset(likes_path, tags_path, questions_path, scale="auto", axes="union") -> Dataset:
    """Load and align the three CSVs.

    The likes CSV cannot express players or games without likes, so by
    default (``axes="union"``) the player axis also covers everyone in the
    answers file and the game axis every tagged game. ``axes="likes"`` uses
    the like file alone and rejects tagged games or answering players it
    does not know. ``axes`` may also be a ``(player_ids, game_ids)`` pair.
    """
    if isinstance(axes, tuple):
        likes = load_likes(likes_path, *axes)
    elif axes in ("union", "likes"):
        likes = load_likes(likes_path)
    else:
        raise ValueError(f"unknown axes mode {axes!r}")
    if axes == "union":
        extra_games = {f[0] for _, f in _read_rows(tags_path, TAGS_HEADER)}
        extra_players = {f[0] for _, f in _read_rows(questions_path, QUESTIONS_HEADER)}
        players = sorted(set(likes.player_ids) | extra_players)
        games = sorted(set(likes.game_ids) | extra_games)
        if len(players) != likes.n or len(games) != likes.m:
            likes = GameLikeMatrix.from_pairs(likes.pairs(), players, games)
    tags = load_game_tags(tags_path, likes.game_ids)
    questions = load_player_questions(questions_path, likes.player_ids, scale=scale)
    return Dataset(likes, tags, questions)


def save_dataset(dataset: Dataset, directory) -> dict[str, Path]:
    """Write the three CSVs plus ``axes.json`` (full player and game axes)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "likes": directory / "likes.csv",
        "tags": directory / "tags.csv",
        "questions": directory / "questions.csv",
        "axes": directory / "axes.json",
    }
    save_likes(dataset.likes, paths["likes"])
    save_game_tags(dataset.tags, paths["tags"])
    save_player_questions(dataset.questions, paths["questions"])
    axes = {"player_ids": list(dataset.likes.player_ids), "game_ids": list(dataset.likes.game_ids)}
    paths["axes"].write_text(json.dumps(axes) + "\n", encoding="utf-8")
    return paths


def load_dataset_dir(directory, scale="auto") -> Dataset:
    """Load a directory written by :func:`save_dataset` (``axes.json`` optional)."""
    directory = Path(directory)
    axes = "union"
    axes_path = directory / "axes.json"
    if axes_path.exists():
        try:
            blob = json.loads(axes_path.read_text(encoding="utf-8"))
            axes = (tuple(blob["player_ids"]), tuple(blob["game_ids"]))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"{axes_path}: malformed axes file ({exc})") from exc
    return load_dataset(
        directory / "likes.csv", directory / "tags.csv", directory / "questions.csv", scale=scale, axes=axes
    )


# -------------------------------------------------------------- synthetic data


@dataclass(frozen=True)
class SyntheticConfig:
    """Dimensions and knobs of a planted bilinear dataset.

    ``tag_probability`` is the Bernoulli rate of each game tag.
    """

    n: int = 2000
    m: int = 500
    r: int = 40
    s: int = 20
    density: float = 0.05
    interaction_rank: int = 4
    noise: float = 0.05
    rng_seed: int = 0
    tag_probability: float = 0.2

    def __post_init__(self):
        for name in ("n", "m", "r", "s", "interaction_rank"):
            if int(getattr(self, name)) < 1:
                raise DataError(f"{name} must be >= 1")
        if not 0 < self.density < 1:
            raise DataError("density must lie in (0, 1)")
        if not 0 <= self.noise < 0.5:
            raise DataError("noise must lie in [0, 0.5)")
        if not 0 < self.tag_probability <= 1:
            raise DataError("tag_probability must lie in (0, 1]")
        if self.interaction_rank > min(self.r, self.s):
            raise DataError("interaction_rank cannot exceed min(r, s)")

    @classmethod
    def from_mapping(cls, mapping) -> SyntheticConfig:
        """Build from string key/value pairs, e.g. parsed ``key=value`` text."""
        aliases = {"rank": "interaction_rank", "seed": "rng_seed"}
        types = {f: type(getattr(cls(), f)) for f in cls.__dataclass_fields__}
        kwargs = {}
        for key, raw in mapping.items():
            key = aliases.get(key.strip(), key.strip())
            if key not in types:
                raise DataError(f"unknown synthetic config key {key!r}")
            try:
                kwargs[key] = types[key](raw)
            except ValueError:
                raise DataError(f"bad value {raw!r} for {key}") from None
        return cls(**kwargs)


def parse_key_values(text: str) -> dict[str, str]:
    """Parse ``key=value`` items separated by commas or newlines (``#`` comments)."""
    out = {}
    for chunk in text.replace("\n", ",").split(","):
        chunk = chunk.split("#", 1)[0].strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise DataError(f"expected key=value, got {chunk!r}")
        key, value = chunk.split("=", 1)
        out[key.strip()] = value.strip()
    return out


@dataclass(frozen=True, eq=False)
class SyntheticTruth:
    """Planted quantities behind a synthetic dataset."""

    interactions: np.ndarray  # r x s, score(i, j) = x_tags(j)^T A x_q(i)
    scores: np.ndarray  # n x m planted bilinear scores
    threshold: float  # like iff score > threshold (before noise)
    scale: float
    clean_likes: np.ndarray = field(repr=False)

    def probabilities(self) -> np.ndarray:
        """Logistic squashing of the planted scores; 0.5 at the threshold."""
        return 1.0 / (1.0 + np.exp(-(self.scores - self.threshold) / self.scale))


def _ids(prefix, count):
    width = len(str(max(count - 1, 0)))
    return tuple(f"{prefix}{i:0{width}d}" for i in range(count))


def _calibrate_threshold(scores, density, max_iter=200):
    lo, hi = float(scores.min()) - 1.0, float(scores.max()) + 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        frac = float((scores > mid).mean())
        if frac > density:
            lo = mid
        else:
            hi = mid
        if abs(frac - density) <= 1e-3 * density:
            break
    # hi always satisfies frac <= density; pick whichever end is closer
    best = min((lo, hi), key=lambda t: abs(float((scores > t).mean()) - density))
    achieved = float((scores > best).mean())
    if abs(achieved - density) > 0.2 * density:
        raise DataError(
            f"could not calibrate like density: target {density:.4g}, achieved {achieved:.4g}"
        )
    return best


def generate_synthetic(config: SyntheticConfig, return_truth: bool = False):
    """Draw a dataset whose likes follow a planted low-rank tag x question model.

    Tags are i.i.d. Bernoulli, answers uniform on -2..2. A rank
    ``interaction_rank`` matrix ``A`` gives scores ``x_tags(j)^T A x_q(i)``;
    a game is liked when the logistic of the shifted score exceeds one half,
    with the shift found by bisection so the like fraction matches
    ``density``. Each entry is then flipped with probability ``noise``.

    Returns
    -------
    Dataset, or (Dataset, SyntheticTruth) when ``return_truth`` is set.
    """
    c = config
    rng = np.random.default_rng(c.rng_seed)
    x_tags = (rng.random((c.m, c.r)) < c.tag_probability).astype(np.uint8)
    x_q = rng.integers(-2, 3, size=(c.n, c.s)).astype(np.int8)
    left = rng.standard_normal((c.r, c.interaction_rank))
    right = rng.standard_normal((c.s, c.interaction_rank))
    planted = left @ right.T / math.sqrt(c.interaction_rank)

    scores = x_q.astype(float) @ planted.T @ x_tags.T.astype(float)
    threshold = _calibrate_threshold(scores, c.density)
    scale = float(scores.std()) or 1.0
    clean = (scores > threshold).astype(np.uint8)

    flips = rng.random((c.n, c.m)) < c.noise
    likes = np.where(flips, 1 - clean, clean).astype(np.uint8)

    player_ids, game_ids = _ids("p", c.n), _ids("g", c.m)
    dataset = Dataset(
        GameLikeMatrix(likes, player_ids, game_ids),
        GameFeatureMatrix(x_tags, game_ids, _ids("t", c.r)),
        PlayerFeatureMatrix(x_q, player_ids, _ids("q", c.s)),
    )
    if return_truth:
        return dataset, SyntheticTruth(planted, scores, threshold, scale, clean)
    return dataset
