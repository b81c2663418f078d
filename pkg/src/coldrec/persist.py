"""JSON container for fitted models and the interaction-matrix CSV export.

Layout::

    {"format": "coldrec-model", "version": 1, "kind": "svd",
     "hyperparameters": {...}, "axes": {"game_ids": [...], ...},
     "matrices": {"P": {"shape": [n, k], "data": [row-major floats]}, ...}}

Floats are written with ``repr`` precision, so a save/load round trip is exact.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .cf import KnnModel, MvnModel, SvdModel
from .content import InteractionModel, QuestionsModel, TagsModel
from .errors import DataError, ModelFormatError
from .linalg import Moments, PcaProjector

FORMAT = "coldrec-model"
VERSION = 1

MODEL_KINDS = ("mvn", "knn", "svd", "tags", "questions", "interactions")


def _pack(arr):
    arr = np.asarray(arr, dtype=float)
    return {"shape": list(arr.shape), "data": arr.ravel(order="C").tolist()}


def _unpack(blob):
    return np.asarray(blob["data"], dtype=float).reshape(blob["shape"])


def _pack_profile(profile, matrices):
    if profile is None:
        return None
    matrices["profile_mean"] = _pack(profile.mean_)
    matrices["profile_components"] = _pack(profile.components_)
    return profile.dims


def _unpack_profile(dims, matrices):
    if dims is None:
        return None
    profile = PcaProjector(int(dims))
    profile.mean_ = _unpack(matrices["profile_mean"])
    profile.components_ = _unpack(matrices["profile_components"])
    return profile


def model_kind(model) -> str:
    for kind, cls in _CLASSES.items():
        if isinstance(model, cls):
            return kind
    raise TypeError(f"cannot serialize {type(model).__name__}")


def to_dict(model) -> dict:
    kind = model_kind(model)
    hyper, axes, matrices = {}, {}, {}
    if kind == "mvn":
        hyper = {"use_correlation": model.use_correlation, "jitter": model.jitter}
        axes = {"game_ids": list(model.game_ids)}
        matrices = {"mu": _pack(model.mu), "sigma": _pack(model.sigma)}
    elif kind == "knn":
        hyper = {"kind": model.kind, "k": model.k}
        axes = {"game_ids": list(model.game_ids)}
        matrices = {"S": _pack(model.S)}
    elif kind == "svd":
        hyper = {"k": model.k, "lambda": model.lam}
        axes = {"player_ids": list(model.player_ids), "game_ids": list(model.game_ids)}
        matrices = {"P": _pack(model.P), "G": _pack(model.G)}
    elif kind == "tags":
        matrices = {"T": _pack(model.T)}
        hyper = {"lambda": model.lam, "pca_dims": _pack_profile(model.profile, matrices)}
        axes = {"player_ids": list(model.player_ids), "tag_names": list(model.tag_names)}
    elif kind == "questions":
        hyper = {"lambda": model.lam}
        axes = {"game_ids": list(model.game_ids), "question_ids": list(model.question_ids)}
        matrices = {"Q": _pack(model.Q)}
    else:
        matrices = {"A": _pack(model.A)}
        hyper = {"lambda": model.lam, "pca_dims": _pack_profile(model.profile, matrices)}
        axes = {"tag_names": list(model.tag_names), "question_ids": list(model.question_ids)}
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": kind,
        "hyperparameters": hyper,
        "axes": axes,
        "matrices": matrices,
    }


def from_dict(blob: dict):
    if not isinstance(blob, dict) or blob.get("format") != FORMAT:
        raise ModelFormatError("not a coldrec model file")
    if blob.get("version") != VERSION:
        raise ModelFormatError(
            f"model file version {blob.get('version')!r} is not supported (expected {VERSION})"
        )
    kind = blob.get("kind")
    try:
        hyper, axes, mats = blob["hyperparameters"], blob["axes"], blob["matrices"]
        if kind == "mvn":
            return MvnModel(
                Moments(_unpack(mats["mu"]), _unpack(mats["sigma"])),
                hyper["use_correlation"], hyper["jitter"], tuple(axes["game_ids"]),
            )
        if kind == "knn":
            return KnnModel(_unpack(mats["S"]), hyper["kind"], hyper["k"], tuple(axes["game_ids"]))
        if kind == "svd":
            return SvdModel(
                _unpack(mats["P"]), _unpack(mats["G"]), hyper["lambda"],
                tuple(axes["player_ids"]), tuple(axes["game_ids"]),
            )
        if kind == "tags":
            return TagsModel(
                _unpack(mats["T"]), hyper["lambda"], tuple(axes["tag_names"]),
                tuple(axes["player_ids"]), _unpack_profile(hyper.get("pca_dims"), mats),
            )
        if kind == "questions":
            return QuestionsModel(
                _unpack(mats["Q"]), hyper["lambda"], tuple(axes["question_ids"]), tuple(axes["game_ids"])
            )
        if kind == "interactions":
            return InteractionModel(
                _unpack(mats["A"]), hyper["lambda"], tuple(axes["tag_names"]),
                tuple(axes["question_ids"]), _unpack_profile(hyper.get("pca_dims"), mats),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt {kind} model: {exc}") from exc
    raise ModelFormatError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(to_dict(model)) + "\n", encoding="utf-8")


def load_model(path):
    try:
        blob = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    return from_dict(blob)


def export_interactions_csv(model: InteractionModel, path) -> None:
    """Write ``A`` with tag names as row labels and question ids as the header."""
    if model.profile is not None:
        raise DataError("the PCA-profile variant has no per-tag interaction rows")
    for label in (*model.tag_names, *model.question_ids):
        if "," in label:
            raise DataError(f"label {label!r} cannot be written unquoted")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(("tag", *model.question_ids)) + "\n")
        for name, row in zip(model.tag_names, model.A):
            fh.write(",".join((name, *(repr(float(v)) for v in row))) + "\n")


_CLASSES = {
    "mvn": MvnModel,
    "knn": KnnModel,
    "svd": SvdModel,
    "tags": TagsModel,
    "questions": QuestionsModel,
    "interactions": InteractionModel,
}
