import json
import subprocess
import sys

import numpy as np
import pytest

from coldrec.cli import main
from coldrec.content import InteractionModel
from coldrec.data import load_dataset_dir
from coldrec.interpret import top_interactions
from coldrec.persist import load_model, save_model

SUBCOMMANDS = ("generate", "split", "fit", "evaluate", "benchmark", "recommend", "interpret")


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["generate", "--n", "60", "--m", "40", "--r", "8", "--s", "5", "--rank", "2",
                 "--density", "0.15", "--noise", "0.02", "--seed", "3", "--out", str(root / "data")]) == 0
    assert main(["split", "--data", str(root / "data"), "--seed", "1", "--out", str(root / "split")]) == 0
    return root


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_generate_writes_dataset(workspace):
    data = load_dataset_dir(workspace / "data")
    assert data.likes.values.shape == (60, 40)
    assert data.tags.r == 8 and data.questions.s == 5


def test_generate_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("n=30\nm=20\nr=4\ns=3\nrank=1\ndensity=0.2  # sparse\n")
    code, out, _ = run(capsys, "generate", "--config", str(cfg), "--seed", "2", "--out", str(tmp_path / "d"))
    assert code == 0 and out == ""
    assert load_dataset_dir(tmp_path / "d").likes.values.shape == (30, 20)


def test_split_files(workspace):
    names = sorted(p.name for p in (workspace / "split").iterdir())
    assert names == ["manifest.json", "train_likes.csv", "validation_s1.csv", "validation_s2.csv",
                     "validation_s3.csv", "validation_s4.csv"]


@pytest.mark.parametrize("kind,setting", [("mvn", 1), ("knn", 1), ("svd", 1), ("tags", 2),
                                          ("questions", 3), ("interactions", 4)])
def test_fit_and_evaluate(workspace, capsys, kind, setting):
    model_path = workspace / f"{kind}.json"
    extra = ["--k", "4", "--max-iters", "10"] if kind == "svd" else []
    code, _, err = run(capsys, "fit", "--model", kind, "--data", str(workspace / "data"),
                       "--split", str(workspace / "split"), "--out", str(model_path), *extra)
    assert code == 0, err
    code, out, err = run(capsys, "evaluate", "--model-file", str(model_path), "--data", str(workspace / "data"),
                         "--split", str(workspace / "split"), "--setting", str(setting))
    assert code == 0, err
    report = json.loads(out)
    assert report["model"] == kind and report["setting"] == setting
    assert 0 <= report["ndcg_at_m"] <= 1 and report["counted_players"] > 0


def test_evaluate_unsupported_setting(workspace, capsys):
    run(capsys, "fit", "--model", "mvn", "--data", str(workspace / "data"), "--split", str(workspace / "split"),
        "--out", str(workspace / "m.json"))
    code, out, err = run(capsys, "evaluate", "--model-file", str(workspace / "m.json"), "--data",
                         str(workspace / "data"), "--split", str(workspace / "split"), "--setting", "3")
    assert code == 2 and out == "" and "setting 3" in err


def test_recommend_excludes_liked_games(workspace, capsys):
    data = load_dataset_dir(workspace / "data")
    counts = data.likes.values.sum(axis=1)
    player = data.likes.player_ids[int(np.argmax(counts))]
    liked = {data.likes.game_ids[j] for j in np.flatnonzero(data.likes.values[data.likes.player_ids.index(player)])}
    code, out, _ = run(capsys, "recommend", "--model", "mvn", "--data", str(workspace / "data"),
                       "--player", player, "--top", "5")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "rank\tgame_id\tscore"
    rows = [line.split("\t") for line in lines[1:]]
    assert [r[0] for r in rows] == ["1", "2", "3", "4", "5"]
    assert not {r[1] for r in rows} & liked
    scores = [float(r[2]) for r in rows]
    assert scores == sorted(scores, reverse=True)


@pytest.mark.parametrize("kind", ["knn", "tags", "questions", "interactions"])
def test_recommend_other_models(workspace, capsys, kind):
    code, out, err = run(capsys, "recommend", "--model", kind, "--data", str(workspace / "data"),
                         "--player", "p03", "--top", "3")
    assert code == 0, err
    assert len(out.splitlines()) == 4


def test_recommend_unknown_player(workspace, capsys):
    code, out, err = run(capsys, "recommend", "--model", "mvn", "--data", str(workspace / "data"),
                         "--player", "nobody")
    assert code == 2 and out == ""


def test_interpret_tag_matches_library(workspace, capsys):
    model_path = workspace / "A.json"
    run(capsys, "fit", "--model", "interactions", "--data", str(workspace / "data"), "--out", str(model_path),
        "--export-csv", str(workspace / "A.csv"))
    model = load_model(model_path)
    code, out, _ = run(capsys, "interpret", "--model-file", str(model_path), "--tag", "t2", "--top", "4",
                       "--format", "json")
    assert code == 0
    blob = json.loads(out)
    expected = top_interactions(model, "t2", 4)
    assert [e["name"] for e in blob["entries"]] == [n for n, _ in expected.entries]
    strengths = [e["strength"] for e in blob["entries"]]
    assert strengths == sorted(strengths, reverse=True) and len(strengths) == 4
    assert (workspace / "A.csv").read_text().startswith("tag,q0,")


def test_interpret_fit_on_the_fly(workspace, capsys):
    code, out, _ = run(capsys, "interpret", "--model", "interactions", "--data", str(workspace / "data"),
                       "--tag", "t0", "--top", "4")
    assert code == 0
    assert out.splitlines()[0] == "t0 (interaction_pairs)"
    assert len(out.splitlines()) == 5


def test_interpret_hand_built_model(tmp_path, capsys):
    A = np.array([[0.1, 0.9, -0.5, 0.3, 0.7]])
    save_model(InteractionModel(A, 1.0, ("puzzle",), ("q1", "q2", "q3", "q4", "q5")), tmp_path / "m.json")
    code, out, _ = run(capsys, "interpret", "--model-file", str(tmp_path / "m.json"), "--tag", "puzzle",
                       "--top", "4", "--format", "json")
    assert [e["name"] for e in json.loads(out)["entries"]] == ["q2", "q5", "q4", "q1"]


def test_interpret_requires_subject(workspace, capsys):
    code, _, err = run(capsys, "interpret", "--model", "mvn", "--data", str(workspace / "data"))
    assert code == 1 and "--game" in err


def test_benchmark_outputs(tmp_path, capsys):
    code, out, _ = run(capsys, "benchmark", "--synthetic", "n=60,m=40,r=6,s=4,rank=2,density=0.15",
                       "--seed", "2", "--svd-k", "2,4", "--svd-lambdas", "1,8", "--content-lambdas", "1,16",
                       "--max-iters", "10", "--out", str(tmp_path / "b"))
    assert code == 0
    assert "Ranking Accuracy by nDCG@m" in out and "Precision@20" in out
    blob = json.loads((tmp_path / "b" / "benchmark.json").read_text())
    assert blob["rows"][0] == "Random" and "fit_seconds" not in blob
    assert (tmp_path / "b" / "ndcg.md").read_text() in out


def test_benchmark_from_directory(workspace, tmp_path, capsys):
    code, _, err = run(capsys, "benchmark", "--data", str(workspace / "data"), "--models", "MVN,Tags",
                       "--content-lambdas", "1,4", "--out", str(tmp_path / "b"))
    assert code == 0, err
    assert json.loads((tmp_path / "b" / "benchmark.json").read_text())["rows"] == ["Random", "MVN", "Tags"]


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["fit", "--model", "mvn", "--bogus"], ["recommend", "--player", "x"],
    ["benchmark", "--synthetic", "n=40", "--models", "BPR"], ["generate", "--out", "x", "--threads", "0"],
])
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1 and out == "" and err


def test_data_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "likes.csv"
    bad.write_text("player_id,game_id\np1\n")
    code, _, err = run(capsys, "split", "--likes", str(bad), "--out", str(tmp_path / "s"))
    assert code == 2 and "likes.csv:2:" in err


def test_numerical_error_exit_code(workspace, capsys):
    code, _, err = run(capsys, "fit", "--model", "svd", "--data", str(workspace / "data"), "--k", "64",
                       "--lambda", "0", "--max-iters", "3", "--out", str(workspace / "bad.json"))
    assert code == 3 and "numerical" in err


def test_version_mismatch_is_data_error(workspace, tmp_path, capsys):
    run(capsys, "fit", "--model", "mvn", "--data", str(workspace / "data"), "--out", str(tmp_path / "m.json"))
    blob = json.loads((tmp_path / "m.json").read_text())
    blob["version"] = 2
    (tmp_path / "old.json").write_text(json.dumps(blob))
    code, _, err = run(capsys, "interpret", "--model-file", str(tmp_path / "old.json"), "--game", "g0")
    assert code == 2 and "version" in err


def test_threads_env(workspace, capsys, monkeypatch):
    monkeypatch.setenv("COLDREC_THREADS", "many")
    code, _, _ = run(capsys, "split", "--data", str(workspace / "data"), "--out", str(workspace / "s2"))
    assert code == 1


@pytest.mark.parametrize("command", SUBCOMMANDS)
def test_help(command):
    proc = subprocess.run([sys.executable, "-m", "coldrec", command, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("usage: coldrec " + command)
