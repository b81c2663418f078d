import json

import numpy as np
import pytest

from coldrec.cf import AlsOptions, knn_similarity, mvn_fit, svd_fit_als
from coldrec.content import kron_ridge_fit, questions_fit, tags_fit, tags_predict
from coldrec.errors import ModelFormatError
from coldrec.persist import export_interactions_csv, load_model, model_kind, save_model, to_dict


@pytest.fixture(scope="module")
def fitted(small_dataset):
    d = small_dataset
    return {
        "mvn": mvn_fit(d.likes),
        "knn": knn_similarity(d.likes, "phi", k=5),
        "svd": svd_fit_als(d.likes, 3, 2.0, AlsOptions(max_iters=5)),
        "tags": tags_fit(d.likes, d.tags, 2.0),
        "tags_pf": tags_fit(d.likes, d.tags, 2.0, popularity_free=True, pca_dims=4),
        "questions": questions_fit(d.likes, d.questions, 2.0),
        "interactions": kron_ridge_fit(d.likes, d.questions, d.tags, 2.0),
    }


def arrays_of(model):
    return {k: v for k, v in vars(model).items() if isinstance(v, np.ndarray)}


@pytest.mark.parametrize("name", ["mvn", "knn", "svd", "tags", "tags_pf", "questions", "interactions"])
def test_round_trip_exact(tmp_path, fitted, name):
    model = fitted[name]
    path = tmp_path / "model.json"
    save_model(model, path)
    again = load_model(path)
    assert type(again) is type(model)
    assert to_dict(again) == to_dict(model)
    for key, arr in arrays_of(model).items():
        np.testing.assert_array_equal(getattr(again, key), arr)


def test_profile_variant_predicts_identically(tmp_path, fitted, small_dataset):
    save_model(fitted["tags_pf"], tmp_path / "m.json")
    again = load_model(tmp_path / "m.json")
    np.testing.assert_array_equal(tags_predict(again, small_dataset.tags), tags_predict(fitted["tags_pf"], small_dataset.tags))


def test_version_mismatch(tmp_path, fitted):
    blob = to_dict(fitted["questions"])
    blob["version"] = 99
    (tmp_path / "m.json").write_text(json.dumps(blob))
    with pytest.raises(ModelFormatError, match="version"):
        load_model(tmp_path / "m.json")


@pytest.mark.parametrize("text", ["not json", '{"format": "other"}',
                                  '{"format": "coldrec-model", "version": 1, "kind": "svd"}'])
def test_corrupt_files(tmp_path, text):
    (tmp_path / "m.json").write_text(text)
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "m.json")


def test_unknown_object():
    with pytest.raises(TypeError):
        model_kind(object())


def test_interaction_csv(tmp_path, fitted):
    model = fitted["interactions"]
    path = tmp_path / "A.csv"
    export_interactions_csv(model, path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == ["tag", *model.question_ids]
    assert [line.split(",")[0] for line in lines[1:]] == list(model.tag_names)
    values = np.array([[float(v) for v in line.split(",")[1:]] for line in lines[1:]])
    np.testing.assert_array_equal(values, model.A)
