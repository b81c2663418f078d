"""End-to-end benchmark over the four cold-start settings.

Each model row is tuned on an inner split carved from the training likes
(never the validation sets), refitted on the full training data with the
chosen hyperparameters, and evaluated in every setting it can handle.
Settings a model cannot handle carry the random baseline's numbers.
"""
from __future__ import annotations

import json
import logging
import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import cf, content
from .data import Dataset, _index_of
from .errors import ColdrecError
from .metrics import MetricReport, evaluate_player_set
from .split import SETTINGS, SplitBundle, SplitConfig, capability_matrix, four_way_split, group_by_player

_logger = logging.getLogger(__name__)

POWERS_OF_TWO = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0)
SVD_DIMS = (4, 8, 16, 32, 64, 128)

# table row -> (capability kind, setting used for tuning)
ROWS = {
    "Random": ("Random", None),
    "MVN": ("MVN", 1),
    "kNN (cos)": ("kNN", 1),
    "kNN (phi)": ("kNN", 1),
    "PureSVD": ("SVD", 1),
    "SVD": ("SVD", 1),
    "Tags": ("Tags", 2),
    "Questions": ("Questions", 3),
    "Tags X Questions": ("TagsXQuestions", 4),
}


@dataclass(frozen=True)
class BenchmarkConfig:
    """Models to run and their hyperparameter grids.

    ``knn_k_grid`` entries of ``None`` mean the full neighbourhood ``k = m``.
    """

    models: tuple[str, ...] = tuple(ROWS)
    svd_k_grid: tuple[int, ...] = SVD_DIMS
    svd_lambda_grid: tuple[float, ...] = POWERS_OF_TWO
    content_lambda_grid: tuple[float, ...] = POWERS_OF_TWO
    knn_k_grid: tuple[int | None, ...] = (None,)
    als_max_iters: int = 100
    als_rel_tol: float = 1e-4
    tuning_fraction: float = 0.10
    popularity_free: bool = False
    k_prec: int = 20
    rng_seed: int = 0
    threads: int = 1
    check_leakage: bool = True

    def __post_init__(self):
        for name in self.models:
            if name not in ROWS:
                raise ValueError(f"unknown model row {name!r}; choose from {list(ROWS)}")
        if not (self.svd_k_grid and self.svd_lambda_grid and self.content_lambda_grid and self.knn_k_grid):
            raise ValueError("hyperparameter grids must be non-empty")
        if any(lam <= 0 for lam in (*self.svd_lambda_grid, *self.content_lambda_grid)):
            raise ValueError("grid lambdas must be positive (PureSVD uses lambda = 0 on its own)")
        if not 0 < self.tuning_fraction < 1:
            raise ValueError("tuning_fraction must lie in (0, 1)")

    def grid(self, row: str) -> list[dict]:
        if row in ("Random", "MVN"):
            return [{}]
        if row.startswith("kNN"):
            return [{"k": k} for k in self.knn_k_grid]
        if row == "PureSVD":
            return [{"k": k, "lambda": 0.0} for k in self.svd_k_grid]
        if row == "SVD":
            return [{"k": k, "lambda": lam} for k in self.svd_k_grid for lam in self.svd_lambda_grid]
        return [{"lambda": lam} for lam in self.content_lambda_grid]


# -------------------------------------------------------------------- scorers


class Scorer:
    """Wrap a fitted model so it can score any (player, game) block.

    ``train`` holds the training likes and features; ``full`` supplies
    features of players and games unseen during training.
    """

    kind = None

    def __init__(self, model, train: Dataset, full: Dataset):
        self.model = model
        self.train = train
        self.full = full
        self._pidx = _index_of(train.likes.player_ids)
        self._gidx = _index_of(train.likes.game_ids)

    def _rows(self, player_ids):
        return [self._pidx[p] for p in player_ids]

    def _cols(self, game_ids):
        return [self._gidx[g] for g in game_ids]

    def scores(self, player_ids: Sequence[str], game_ids: Sequence[str]) -> np.ndarray:
        raise NotImplementedError


class RandomScorer(Scorer):
    """Uniform scores; the model slot holds the integer seed."""

    kind = "Random"

    def scores(self, player_ids, game_ids):
        # seeded by the block so every setting draws its own reproducible stream
        key = [
            self.model,
            zlib.crc32("\n".join(player_ids).encode()),
            zlib.crc32("\n".join(game_ids).encode()),
        ]
        return np.random.default_rng(key).random((len(player_ids), len(game_ids)))


class MvnScorer(Scorer):
    kind = "MVN"

    def scores(self, player_ids, game_ids):
        R = self.train.likes.values
        cols = self._cols(game_ids)
        return np.vstack(
            [cf.mvn_predict(self.model, np.flatnonzero(R[i]))[cols] for i in self._rows(player_ids)]
        )


class KnnScorer(Scorer):
    kind = "kNN"

    def scores(self, player_ids, game_ids):
        liked = self.train.likes.values[self._rows(player_ids)].astype(float)
        return (liked @ self.model.weights.T)[:, self._cols(game_ids)]


class SvdScorer(Scorer):
    kind = "SVD"

    def scores(self, player_ids, game_ids):
        return self.model.P[self._rows(player_ids)] @ self.model.G[self._cols(game_ids)].T


class TagsScorer(Scorer):
    kind = "Tags"

    def scores(self, player_ids, game_ids):
        m = self.model
        sub = content.TagsModel(m.T[self._rows(player_ids)], m.lam, m.tag_names, profile=m.profile)
        return content.tags_predict(sub, self.full.tags.subset(game_ids))


class QuestionsScorer(Scorer):
    kind = "Questions"

    def scores(self, player_ids, game_ids):
        X = self.full.questions.subset(player_ids)
        return content.questions_predict(self.model, X)[:, self._cols(game_ids)]


class InteractionScorer(Scorer):
    kind = "TagsXQuestions"

    def scores(self, player_ids, game_ids):
        return content.kron_scores(
            self.model, self.full.questions.subset(player_ids), self.full.tags.subset(game_ids)
        )


_SCORERS = {
    cf.MvnModel: MvnScorer,
    cf.KnnModel: KnnScorer,
    cf.SvdModel: SvdScorer,
    content.TagsModel: TagsScorer,
    content.QuestionsModel: QuestionsScorer,
    content.InteractionModel: InteractionScorer,
}


def scorer_for(model, train: Dataset, full: Dataset) -> Scorer:
    """Wrap an already fitted model (e.g. loaded from disk)."""
    try:
        cls = _SCORERS[type(model)]
    except KeyError:
        raise TypeError(f"no scorer for {type(model).__name__}") from None
    return cls(model, train, full)


def fit_row(row: str, params: dict, train: Dataset, config: BenchmarkConfig):
    """Fit the model behind a table row on ``train``."""
    pf = config.popularity_free
    likes = train.likes
    if row == "Random":
        return config.rng_seed
    if row == "MVN":
        return cf.mvn_fit(likes, use_correlation=pf)
    if row.startswith("kNN"):
        return cf.knn_similarity(likes, "cosine" if "cos" in row else "phi", params.get("k"))
    if row in ("SVD", "PureSVD"):
        opts = cf.AlsOptions(config.als_max_iters, config.als_rel_tol, config.rng_seed)
        return cf.svd_fit_als(likes, params["k"], params["lambda"], opts)
    if row == "Tags":
        return content.tags_fit(likes, train.tags, params["lambda"], pf)
    if row == "Questions":
        return content.questions_fit(likes, train.questions, params["lambda"], pf)
    if row == "Tags X Questions":
        return content.kron_ridge_fit(likes, train.questions, train.tags, params["lambda"], pf)
    raise ValueError(f"unknown model row {row!r}")


def build_scorer(row: str, params: dict, train: Dataset, full: Dataset, config: BenchmarkConfig) -> Scorer:
    model = fit_row(row, params, train, config)
    if row == "Random":
        return RandomScorer(model, train, full)
    return scorer_for(model, train, full)


# ----------------------------------------------------------------- evaluation


def training_dataset(full: Dataset, bundle: SplitBundle) -> Dataset:
    """Training likes with the features of the training players and games."""
    return Dataset(
        bundle.train_likes,
        full.tags.subset(bundle.train_game_ids),
        full.questions.subset(bundle.train_player_ids),
    )


def evaluate_setting(scorer: Scorer, bundle: SplitBundle, setting: int, k_prec: int = 20) -> MetricReport:
    """Score one validation setting: every validation player against the setting's game axis."""
    _, games = bundle.axes(setting)
    validation = group_by_player(bundle.validation[setting], games)
    players = list(validation)
    if not players:
        return MetricReport(math.nan, math.nan, k_prec=k_prec)
    block = scorer.scores(players, games)
    row_of = {p: i for i, p in enumerate(players)}
    exclusions = {}
    if setting == 1:
        train = bundle.train_likes
        tidx = _index_of(train.player_ids)
        for p in players:
            exclusions[p] = np.flatnonzero(train.values[tidx[p]]).tolist()
    return evaluate_player_set(lambda p: block[row_of[p]], validation, exclusions, k_prec)


def _assert_no_leakage(matrix, pairs):
    pidx, gidx = _index_of(matrix.player_ids), _index_of(matrix.game_ids)
    for p, g in pairs:
        if p in pidx and g in gidx and matrix.values[pidx[p], gidx[g]]:
            raise AssertionError(f"validation pair ({p}, {g}) is visible to training")


@dataclass
class GridResult:
    best: dict
    curve: list  # (params, score or None, error or None) in grid order


def _grid_key(params):
    return (params.get("lambda", 0.0), params.get("k") or 0)


def grid_search(evaluate: Callable[[dict], float], grid: Sequence[dict], threads: int = 1) -> GridResult:
    """Evaluate every grid point and return the best with the whole curve.

    Ties go to the smaller lambda, then the smaller k. Failing points are
    recorded in the curve; if every point fails the last error is raised.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty hyperparameter grid")

    def run(params):
        try:
            return params, float(evaluate(params)), None
        except (ColdrecError, np.linalg.LinAlgError) as exc:
            return params, None, exc

    if threads > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            curve = list(pool.map(run, grid))
    else:
        curve = [run(p) for p in grid]

    ok = [(p, s) for p, s, _ in curve if s is not None and not math.isnan(s)]
    if not ok:
        errors = [e for _, _, e in curve if e is not None]
        if errors:
            raise errors[-1]
        raise ColdrecError("no grid point produced a finite score")
    best = min(ok, key=lambda ps: (-ps[1], *_grid_key(ps[0])))[0]
    return GridResult(best, [(p, s, None if e is None else str(e)) for p, s, e in curve])


@dataclass
class CellResult:
    ndcg: float | None
    precision: float | None
    source: str  # "model", "baseline" or "error"
    counted_players: int = 0
    error: str | None = None


@dataclass
class BenchmarkResult:
    rows: list[str]
    cells: dict  # row -> {setting -> CellResult}
    chosen: dict  # row -> params
    curves: dict  # row -> grid curve
    fit_seconds: dict = field(default_factory=dict)
    capability: dict = field(default_factory=dict)
    rng_seed: int = 0
    k_prec: int = 20

    def value(self, row, setting, metric="ndcg"):
        return getattr(self.cells[row][setting], metric)

    def to_dict(self, include_timing: bool = False) -> dict:
        def clean(x):
            if isinstance(x, float) and math.isnan(x):
                return None
            return x

        out = {
            "rng_seed": self.rng_seed,
            "k_prec": self.k_prec,
            "rows": list(self.rows),
            "results": {
                row: {
                    str(s): {
                        "ndcg_at_m": clean(c.ndcg),
                        "precision_at_k": clean(c.precision),
                        "source": c.source,
                        "counted_players": c.counted_players,
                        "error": c.error,
                    }
                    for s, c in self.cells[row].items()
                }
                for row in self.rows
            },
            "capability": {row: sorted(self.capability.get(row, ())) for row in self.rows},
            "chosen_hyperparameters": {row: self.chosen.get(row) for row in self.rows},
            "tuning_curves": {
                row: [{"params": p, "score": clean(s), "error": e} for p, s, e in self.curves.get(row, [])]
                for row in self.rows
            },
        }
        if include_timing:
            out["fit_seconds"] = dict(self.fit_seconds)
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"

    def to_markdown(self, metric: str = "ndcg") -> str:
        title = (
            "Ranking Accuracy by nDCG@m (%)" if metric == "ndcg"
            else f"Recommendation List Accuracy by Precision@{self.k_prec} (%)"
        )
        lines = [
            f"### {title}",
            "",
            "| Model | Setting 1 | Setting 2 | Setting 3 | Setting 4 |",
            "|---:|---:|---:|---:|---:|",
        ]
        for row in self.rows:
            vals = []
            for s in SETTINGS:
                v = getattr(self.cells[row][s], metric)
                vals.append("err" if v is None or math.isnan(v) else f"{100 * v:.1f}")
            lines.append(f"| {row} | " + " | ".join(vals) + " |")
        return "\n".join(lines) + "\n"


def _cell(report: MetricReport, source="model") -> CellResult:
    return CellResult(report.ndcg_at_m, report.precision_at_20, source, report.counted_players)


def run_benchmark(
    dataset: Dataset,
    split_config: SplitConfig | None = None,
    bench_config: BenchmarkConfig | None = None,
    bundle: SplitBundle | None = None,
) -> BenchmarkResult:
    """Split once, tune every model on an inner split, refit, and fill in the tables.

    A precomputed ``bundle`` may be passed instead of splitting here.
    """
    split_config = split_config or SplitConfig()
    config = bench_config or BenchmarkConfig()
    bundle = bundle or four_way_split(dataset, split_config)
    train = training_dataset(dataset, bundle)

    inner_config = SplitConfig(
        test_game_fraction=config.tuning_fraction,
        test_player_fraction=config.tuning_fraction,
        setting1_player_fraction=config.tuning_fraction,
        seed_likes_per_player=split_config.seed_likes_per_player,
        rng_seed=config.rng_seed,
    )
    inner = four_way_split(train, inner_config)
    inner_train = training_dataset(train, inner)

    if config.check_leakage:
        outer_pairs = set().union(*bundle.validation.values())
        _assert_no_leakage(bundle.train_likes, outer_pairs)
        _assert_no_leakage(inner.train_likes, outer_pairs | set().union(*inner.validation.values()))

    rows = ["Random", *[r for r in config.models if r != "Random"]]
    cells, chosen, curves, timings, capability = {}, {}, {}, {}, {}

    random_scorer = build_scorer("Random", {}, train, dataset, config)
    baseline = {s: evaluate_setting(random_scorer, bundle, s, config.k_prec) for s in SETTINGS}
    cells["Random"] = {s: _cell(baseline[s]) for s in SETTINGS}
    chosen["Random"], curves["Random"] = {}, []
    capability["Random"] = capability_matrix("Random")

    for row in rows[1:]:
        kind, tune_setting = ROWS[row]
        supported = capability_matrix(kind)
        capability[row] = supported
        row_cells = {s: _cell(baseline[s], "baseline") for s in SETTINGS if s not in supported}

        def tuning_score(params, row=row, tune_setting=tune_setting):
            scorer = build_scorer(row, params, inner_train, train, config)
            return evaluate_setting(scorer, inner, tune_setting, config.k_prec).ndcg_at_m

        try:
            grid = config.grid(row)
            if len(grid) == 1:
                result = GridResult(grid[0], [(grid[0], None, None)])
            else:
                result = grid_search(tuning_score, grid, config.threads)
            chosen[row], curves[row] = result.best, result.curve
            _log_curve_shape(row, result)
            start = time.perf_counter()
            scorer = build_scorer(row, result.best, train, dataset, config)
            timings[row] = time.perf_counter() - start
            for s in sorted(supported):
                row_cells[s] = _cell(evaluate_setting(scorer, bundle, s, config.k_prec))
        except (ColdrecError, np.linalg.LinAlgError) as exc:
            _logger.error("model %s failed: %s", row, exc)
            chosen.setdefault(row, None)
            curves.setdefault(row, [])
            for s in supported:
                row_cells.setdefault(s, CellResult(None, None, "error", 0, str(exc)))
        cells[row] = {s: row_cells[s] for s in SETTINGS}

    return BenchmarkResult(rows, cells, chosen, curves, timings, capability, config.rng_seed, config.k_prec)


def _log_curve_shape(row, result):
    lams = [(p.get("lambda"), s) for p, s, _ in result.curve if s is not None and p.get("lambda")]
    if row != "SVD" or len(lams) < 3:
        return
    best_lam = result.best.get("lambda")
    edge = best_lam in (min(l for l, _ in lams), max(l for l, _ in lams))
    _logger.info("SVD lambda optimum %s is %s the grid", best_lam, "on the edge of" if edge else "inside")
