"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
Only the requested artifact goes to stdout; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import cf, content, interpret, persist
from .data import (
    Dataset, SyntheticConfig, generate_synthetic, load_dataset, load_dataset_dir, load_game_tags, load_likes,
    load_player_questions, parse_key_values, save_dataset,
)
from .errors import DataError, NumericalError
from .harness import (
    POWERS_OF_TWO, ROWS, SVD_DIMS, BenchmarkConfig, evaluate_setting, run_benchmark, scorer_for,
    training_dataset,
)
from .metrics import rank_games
from .split import SplitConfig, capability_matrix, four_way_split, load_split, save_split

_logger = logging.getLogger("coldrec")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

_KIND_CAPABILITY = {
    "mvn": "MVN", "knn": "kNN", "svd": "SVD",
    "tags": "Tags", "questions": "Questions", "interactions": "TagsXQuestions",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# ----------------------------------------------------------------- arguments


def _add_data_args(p, required=True):
    g = p.add_argument_group("input data")
    g.add_argument("--data", type=Path, help="directory holding likes.csv, tags.csv, questions.csv")
    g.add_argument("--likes", type=Path, help="likes CSV (player_id,game_id)")
    g.add_argument("--tags", type=Path, help="tags CSV (game_id,tag)")
    g.add_argument("--questions", type=Path, help="answers CSV (player_id,question_id,answer)")
    g.add_argument("--scale", choices=("auto", "centered", "1-5"), default="auto",
                   help="answer scale of the questions CSV")
    p.set_defaults(_data_required=required)


def _add_model_args(p):
    g = p.add_argument_group("model hyperparameters")
    g.add_argument("--lambda", dest="lam", type=float, help="ridge / ALS regularization")
    g.add_argument("--k", type=int, default=32, help="SVD latent dimension")
    g.add_argument("--neighbors", type=int, help="kNN neighbourhood size (default: all games)")
    g.add_argument("--similarity", choices=("cos", "phi"), default="cos", help="kNN similarity")
    g.add_argument("--correlation", action="store_true", help="MVN on the correlation matrix")
    g.add_argument("--popularity-free", action="store_true",
                   help="content models on standardized likes (and PCA tag profiles)")
    g.add_argument("--pca-dims", type=int, default=content.DEFAULT_PCA_DIMS)
    g.add_argument("--max-iters", type=int, default=100, help="ALS iterations")
    g.add_argument("--rel-tol", type=float, default=1e-4, help="ALS stopping threshold")
    g.add_argument("--seed", type=int, default=0, help="ALS initialization seed")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, help="worker cap (env COLDREC_THREADS)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")

    parser = _Parser(prog="coldrec", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("generate", parents=[common], help="write a synthetic dataset")
    p.add_argument("--config", type=Path, help="key=value file; flags override it")
    for name in ("n", "m", "r", "s", "rank"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--density", type=float)
    p.add_argument("--noise", type=float)
    p.add_argument("--tag-probability", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("split", parents=[common], help="four-setting train/validation split")
    _add_data_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-game-fraction", type=float, default=0.25)
    p.add_argument("--test-player-fraction", type=float, default=0.25)
    p.add_argument("--setting1-fraction", type=float, default=0.20)
    p.add_argument("--seed-likes", type=int, default=3)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("fit", parents=[common], help="fit one model and save it")
    p.add_argument("--model", choices=persist.MODEL_KINDS, required=True)
    _add_data_args(p)
    p.add_argument("--split", type=Path, help="fit on the training part of this split")
    _add_model_args(p)
    p.add_argument("--out", type=Path, help="model file (default: stdout)")
    p.add_argument("--export-csv", type=Path, help="interactions only: write A as a labelled CSV")

    p = sub.add_parser("evaluate", parents=[common], help="metrics of a fitted model on one setting")
    p.add_argument("--model-file", type=Path, required=True)
    _add_data_args(p)
    p.add_argument("--split", type=Path, required=True)
    p.add_argument("--setting", type=int, choices=(1, 2, 3, 4), required=True)
    p.add_argument("--k-prec", type=int, default=20)
    p.add_argument("--out", type=Path, help="report file (default: stdout)")

    p = sub.add_parser("benchmark", parents=[common], help="all models x all settings")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path, help="dataset directory")
    src.add_argument("--synthetic", help="synthetic config as key=value,key=value")
    p.add_argument("--seed", type=int, default=0, help="seed for data, split, tuning and baseline")
    p.add_argument("--models", help="comma-separated rows, default all: " + ", ".join(ROWS))
    p.add_argument("--svd-k", type=_int_list, default=SVD_DIMS)
    p.add_argument("--svd-lambdas", type=_float_list, default=POWERS_OF_TWO)
    p.add_argument("--content-lambdas", type=_float_list, default=POWERS_OF_TWO)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--popularity-free", action="store_true")
    p.add_argument("--timings", action="store_true", help="include wall-clock fit times in the JSON")
    p.add_argument("--out", type=Path, help="directory for benchmark.json, ndcg.md, precision.md")
    p.set_defaults(scale="auto")

    p = sub.add_parser("recommend", parents=[common], help="top games for one player")
    _add_data_args(p)
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument("--model", choices=persist.MODEL_KINDS, help="fit this model on --data")
    how.add_argument("--model-file", type=Path)
    p.add_argument("--player", required=True)
    p.add_argument("--top", type=int, default=20)
    _add_model_args(p)

    p = sub.add_parser("interpret", parents=[common], help="strongest coefficients of a model")
    _add_data_args(p, required=False)
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument("--model", choices=("mvn", "tags", "questions", "interactions"))
    how.add_argument("--model-file", type=Path)
    p.add_argument("--game", help="subject game (mvn, questions)")
    p.add_argument("--player", help="subject player (tags)")
    p.add_argument("--tag", help="subject tag (interactions; omit for the global ranking)")
    p.add_argument("--top", type=int, default=4)
    p.add_argument("--format", choices=("text", "json"), default="text")
    _add_model_args(p)
    return parser


# ------------------------------------------------------------------- helpers


def _load_data(args, need_tags=True, need_questions=True) -> Dataset | tuple:
    if args.data and not (args.tags or args.questions) and (args.data / "tags.csv").exists() \
            and (args.data / "questions.csv").exists():
        return load_dataset_dir(args.data, scale=args.scale)
    if args.data:
        likes_p = args.data / "likes.csv"
        tags_p = args.tags or args.data / "tags.csv"
        q_p = args.questions or args.data / "questions.csv"
    elif args.likes:
        likes_p, tags_p, q_p = args.likes, args.tags, args.questions
    else:
        raise UsageError("give --data DIR or --likes FILE")
    if tags_p is not None and q_p is not None and Path(tags_p).exists() and Path(q_p).exists():
        return load_dataset(likes_p, tags_p, q_p, scale=args.scale)
    if need_tags and (tags_p is None or not Path(tags_p).exists()):
        raise UsageError("this model needs game tags (--tags or --data)")
    if need_questions and (q_p is None or not Path(q_p).exists()):
        raise UsageError("this model needs player answers (--questions or --data)")
    likes = load_likes(likes_p)
    tags = load_game_tags(tags_p, likes.game_ids) if tags_p and Path(tags_p).exists() else None
    questions = (
        load_player_questions(q_p, likes.player_ids, args.scale) if q_p and Path(q_p).exists() else None
    )
    return likes, tags, questions


def _parts(data):
    if isinstance(data, Dataset):
        return data.likes, data.tags, data.questions
    return data


def _needs(kind):
    return kind in ("tags", "interactions"), kind in ("questions", "interactions")


def _fit(kind, likes, tags, questions, args):
    if kind == "mvn":
        return cf.mvn_fit(likes, use_correlation=args.correlation)
    if kind == "knn":
        return cf.knn_similarity(likes, args.similarity, args.neighbors)
    lam = args.lam
    if kind == "svd":
        opts = cf.AlsOptions(args.max_iters, args.rel_tol, args.seed)
        return cf.svd_fit_als(likes, args.k, 8.0 if lam is None else lam, opts)
    lam = 1.0 if lam is None else lam
    if kind == "tags":
        return content.tags_fit(likes, tags, lam, args.popularity_free, args.pca_dims)
    if kind == "questions":
        return content.questions_fit(likes, questions, lam, args.popularity_free)
    return content.kron_ridge_fit(likes, questions, tags, lam, args.popularity_free, args.pca_dims)


def _write(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------- commands


def cmd_generate(args):
    values = parse_key_values(args.config.read_text(encoding="utf-8")) if args.config else {}
    flags = {
        "n": args.n, "m": args.m, "r": args.r, "s": args.s, "interaction_rank": args.rank,
        "density": args.density, "noise": args.noise, "tag_probability": args.tag_probability,
        "rng_seed": args.seed,
    }
    values.update({k: str(v) for k, v in flags.items() if v is not None})
    config = SyntheticConfig.from_mapping(values)
    dataset = generate_synthetic(config)
    save_dataset(dataset, args.out)
    _logger.info("wrote %d x %d dataset (density %.4f) to %s",
                 dataset.likes.n, dataset.likes.m, dataset.likes.density, args.out)


def cmd_split(args):
    data = _load_data(args, need_tags=False, need_questions=False)
    likes = data.likes if isinstance(data, Dataset) else data[0]
    config = SplitConfig(
        args.test_game_fraction, args.test_player_fraction, args.setting1_fraction,
        args.seed_likes, args.seed,
    )
    bundle = four_way_split(likes, config)
    save_split(bundle, args.out)
    for s in (1, 2, 3, 4):
        _logger.info("setting %d: %d validation likes", s, len(bundle.validation[s]))


def cmd_fit(args):
    need_t, need_q = _needs(args.model)
    likes, tags, questions = _parts(_load_data(args, need_t, need_q))
    if args.split:
        bundle = load_split(args.split)
        likes = bundle.train_likes
        if tags is not None:
            tags = tags.subset(bundle.train_game_ids)
        if questions is not None:
            questions = questions.subset(bundle.train_player_ids)
    model = _fit(args.model, likes, tags, questions, args)
    blob = json.dumps(persist.to_dict(model)) + "\n"
    _write(blob, args.out)
    if args.export_csv:
        if args.model != "interactions":
            raise UsageError("--export-csv only applies to --model interactions")
        persist.export_interactions_csv(model, args.export_csv)


def cmd_evaluate(args):
    model = persist.load_model(args.model_file)
    kind = persist.model_kind(model)
    if args.setting not in capability_matrix(_KIND_CAPABILITY[kind]):
        raise DataError(f"a {kind} model cannot score setting {args.setting}")
    data = _load_data(args)
    bundle = load_split(args.split)
    train = training_dataset(data, bundle)
    report = evaluate_setting(scorer_for(model, train, data), bundle, args.setting, args.k_prec)
    out = report.to_dict()
    out["setting"] = args.setting
    out["model"] = kind
    _write(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out)


def cmd_benchmark(args):
    if args.synthetic:
        values = parse_key_values(args.synthetic)
        values.setdefault("rng_seed", str(args.seed))
        dataset = generate_synthetic(SyntheticConfig.from_mapping(values))
    else:
        dataset = load_dataset_dir(args.data)
    models = tuple(m.strip() for m in args.models.split(",")) if args.models else tuple(ROWS)
    try:
        bench = BenchmarkConfig(
            models=models, svd_k_grid=args.svd_k, svd_lambda_grid=args.svd_lambdas,
            content_lambda_grid=args.content_lambdas, als_max_iters=args.max_iters,
            popularity_free=args.popularity_free, rng_seed=args.seed, threads=args.threads,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = run_benchmark(dataset, SplitConfig(rng_seed=args.seed), bench)
    tables = result.to_markdown("ndcg") + "\n" + result.to_markdown("precision")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "benchmark.json").write_text(result.to_json(args.timings), encoding="utf-8")
        (args.out / "ndcg.md").write_text(result.to_markdown("ndcg"), encoding="utf-8")
        (args.out / "precision.md").write_text(result.to_markdown("precision"), encoding="utf-8")
    sys.stdout.write(tables)
    for row, secs in result.fit_seconds.items():
        _logger.info("fit %-18s %.3fs", row, secs)


def _obtain_model(args, kinds):
    if args.model_file:
        model = persist.load_model(args.model_file)
        if persist.model_kind(model) not in kinds:
            raise DataError(f"model kind {persist.model_kind(model)!r} is not supported here")
        return model, None
    need_t, need_q = _needs(args.model)
    data = _load_data(args, need_t, need_q)
    return _fit(args.model, *_parts(data), args), data


def recommend_scores(model, likes, tags, questions, player):
    """Scores over a candidate game axis for one player, plus the games to exclude."""
    pidx = {p: i for i, p in enumerate(likes.player_ids)}
    if player not in pidx:
        raise DataError(f"unknown player {player!r}")
    liked_ids = {likes.game_ids[j] for j in np.flatnonzero(likes.values[pidx[player]])}
    kind = persist.model_kind(model)

    if kind in ("tags", "interactions"):
        if tags is None:
            raise UsageError("this model needs game tags (--tags or --data)")
        games = likes.game_ids
    else:
        games = model.game_ids or likes.game_ids
    gpos = {g: j for j, g in enumerate(games)}
    liked = [gpos[g] for g in liked_ids if g in gpos]

    if kind == "mvn":
        scores = cf.mvn_predict(model, liked)
    elif kind == "knn":
        row = np.zeros(len(games))
        row[liked] = 1.0
        scores = cf.knn_predict(model, row)
    elif kind == "svd":
        if player not in model.player_ids:
            raise DataError(f"player {player!r} was not in the SVD training data")
        scores = model.G @ model.P[model.player_ids.index(player)]
    elif kind == "tags":
        if player not in model.player_ids:
            raise DataError(f"player {player!r} was not in the Tags training data")
        i = model.player_ids.index(player)
        sub = content.TagsModel(model.T[i : i + 1], model.lam, model.tag_names, profile=model.profile)
        scores = content.tags_predict(sub, tags)[0]
    else:
        if questions is None:
            raise UsageError("this model needs player answers (--questions or --data)")
        xq = questions.subset([player])
        if kind == "questions":
            scores = content.questions_predict(model, xq)[0]
        else:
            scores = content.kron_scores(model, xq, tags)[0]
    return tuple(games), np.asarray(scores, dtype=float), liked


def cmd_recommend(args):
    if args.top < 1:
        raise UsageError("--top must be positive")
    model, data = _obtain_model(args, persist.MODEL_KINDS)
    if data is None:
        need_t, need_q = _needs(persist.model_kind(model))
        data = _load_data(args, need_t, need_q)
    games, scores, liked = recommend_scores(model, *_parts(data), args.player)
    ranked = rank_games(scores, liked)
    lines = ["rank\tgame_id\tscore"]
    for rank, (j, score) in enumerate(zip(ranked.order[: args.top], ranked.scores), start=1):
        lines.append(f"{rank}\t{games[j]}\t{score:.6g}")
    sys.stdout.write("\n".join(lines) + "\n")


def cmd_interpret(args):
    model, _ = _obtain_model(args, ("mvn", "tags", "questions", "interactions"))
    kind = persist.model_kind(model)
    if kind == "mvn":
        if not args.game:
            raise UsageError("--game is required for mvn")
        report = interpret.top_correlated_games(model, args.game, args.top)
    elif kind == "tags":
        if not args.player:
            raise UsageError("--player is required for tags")
        report = interpret.top_tag_responses(model, args.player, args.top)
    elif kind == "questions":
        if not args.game:
            raise UsageError("--game is required for questions")
        report = interpret.top_question_responses(model, args.game, args.top)
    else:
        report = interpret.top_interactions(model, args.tag, args.top)
    sys.stdout.write((report.to_json() if args.format == "json" else report.to_text()) + "\n")


_COMMANDS = {
    "generate": cmd_generate,
    "split": cmd_split,
    "fit": cmd_fit,
    "evaluate": cmd_evaluate,
    "benchmark": cmd_benchmark,
    "recommend": cmd_recommend,
    "interpret": cmd_interpret,
}


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("COLDREC_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"COLDREC_THREADS must be an integer, got {env!r}") from None
    return 1


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.threads = _threads(args)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
