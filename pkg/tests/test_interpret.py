import json

import numpy as np
import pytest

from coldrec.cf import MvnModel, mvn_fit
from coldrec.content import InteractionModel, QuestionsModel, TagsModel, questions_fit, tags_fit
from coldrec.data import GameFeatureMatrix, GameLikeMatrix
from coldrec.errors import DataError
from coldrec.interpret import (
    top_correlated_games,
    top_interactions,
    top_question_responses,
    top_tag_responses,
)
from coldrec.linalg import Moments


class TestCorrelatedGames:
    def test_co_liked_pair(self):
        likes = GameLikeMatrix(np.array([[1, 1, 0], [0, 0, 1], [1, 1, 1], [0, 0, 0]]),
                               ["a", "b", "c", "d"], ["chess", "go", "pong"])
        model = mvn_fit(likes)
        report = top_correlated_games(model, "chess", top_k=2)
        assert report.entries[0][0] == "go"
        assert report.entries[0][1] == pytest.approx(1.0)
        assert top_correlated_games(model, "go").entries[0][0] == "chess"

    def test_zero_variance_game(self, caplog):
        likes = GameLikeMatrix(np.array([[1, 0], [0, 0]]), ["a", "b"], ["g1", "g2"])
        report = top_correlated_games(mvn_fit(likes), "g2")
        assert report.entries == ()
        assert "zero variance" in caplog.text

    def test_hand_built_sigma(self):
        sigma = np.array([[0.25, 0.05, -0.1], [0.05, 0.16, 0.0], [-0.1, 0.0, 0.25]])
        model = MvnModel(Moments(np.full(3, 0.5), sigma), game_ids=("x", "y", "z"))
        report = top_correlated_games(model, "x")
        # corr(x, y) = 0.05 / (0.5 * 0.4) = 0.25, corr(x, z) = -0.1 / 0.25 = -0.4
        assert [name for name, _ in report.entries] == ["y", "z"]
        assert report.entries[0][1] == pytest.approx(0.25)
        assert report.entries[1][1] == pytest.approx(-0.4)

    def test_unknown_game(self):
        model = MvnModel(Moments(np.zeros(2), np.eye(2)), game_ids=("a", "b"))
        with pytest.raises(DataError):
            top_correlated_games(model, "c")


class TestTagResponses:
    def test_single_tag_player_ranks_it_first(self):
        R = np.array([[0, 1, 0], [0, 0, 0]])
        tags = GameFeatureMatrix(np.eye(3), ("g1", "g2", "g3"), ("casual", "racing", "sports"))
        model = tags_fit(GameLikeMatrix(R, ["p1", "p2"], ["g1", "g2", "g3"]), tags, 1.0)
        assert top_tag_responses(model, "p1").entries[0][0] == "racing"
        assert all(v == 0 for _, v in top_tag_responses(model, "p2").entries)

    def test_hand_sorted_row(self, rng):
        T = rng.normal(size=(3, 6))
        names = tuple("abcdef")
        model = TagsModel(T, 1.0, names, ("p1", "p2", "p3"))
        report = top_tag_responses(model, "p2", top_k=3)
        expected = sorted(zip(names, T[1]), key=lambda e: -e[1])[:3]
        assert [n for n, _ in report.entries] == [n for n, _ in expected]

    def test_ties_alphabetical(self):
        model = TagsModel(np.array([[1.0, 2.0, 1.0, 2.0]]), 1.0, ("d", "c", "b", "a"), ("p",))
        assert [n for n, _ in top_tag_responses(model, "p").entries] == ["a", "c", "b", "d"]

    def test_fewer_entries_than_requested(self):
        model = TagsModel(np.array([[1.0, 2.0]]), 1.0, ("a", "b"), ("p",))
        assert len(top_tag_responses(model, "p", top_k=10).entries) == 2


class TestQuestionResponses:
    def test_single_question_game(self):
        R = np.array([[1, 0], [0, 0], [0, 0]])
        model = questions_fit(R, np.eye(3), 1.0)
        name, strength = top_question_responses(model, "0").entries[0]
        assert name == "question0" and strength == pytest.approx(0.5)
        assert all(v == 0 for _, v in top_question_responses(model, "1").entries)

    def test_hand_sorted_row(self, rng):
        Q = rng.normal(size=(2, 5))
        model = QuestionsModel(Q, 1.0, ("q1", "q2", "q3", "q4", "q5"), ("gA", "gB"))
        report = top_question_responses(model, "gB", top_k=5)
        assert [v for _, v in report.entries] == sorted(Q[1], reverse=True)


class TestInteractions:
    def make(self, A):
        r, s = A.shape
        return InteractionModel(np.asarray(A, dtype=float), 1.0,
                                tuple(f"t{i}" for i in range(r)), tuple(f"q{j}" for j in range(s)))

    def test_single_nonzero(self):
        A = np.zeros((3, 4))
        A[2, 1] = 0.7
        report = top_interactions(self.make(A))
        assert report.entries[0] == (("t2", "q1"), 0.7)

    def test_global_by_magnitude(self):
        A = np.array([[0.1, -0.9], [0.5, 0.3], [-0.2, 0.6]])
        report = top_interactions(self.make(A), top_k=4)
        assert [n for n, _ in report.entries] == [("t0", "q1"), ("t2", "q1"), ("t1", "q0"), ("t1", "q1")]
        assert report.entries[0][1] == -0.9
        assert report.rank_by == "magnitude"

    def test_per_tag_signed(self):
        A = np.array([[0.1, -0.9, 0.4]])
        report = top_interactions(self.make(A), tag="t0")
        assert [n for n, _ in report.entries] == ["q2", "q0", "q1"]
        with pytest.raises(DataError):
            top_interactions(self.make(A), tag="nope")

    def test_permutation_equivariance(self, rng):
        A = rng.normal(size=(4, 3))
        model = self.make(A)
        perm = [2, 0, 3, 1]
        permuted = InteractionModel(A[perm], 1.0, tuple(model.tag_names[i] for i in perm), model.question_ids)
        assert top_interactions(model, top_k=12).entries == top_interactions(permuted, top_k=12).entries

    def test_serialisation(self):
        report = top_interactions(self.make(np.array([[1.0, -2.0]])))
        blob = json.loads(report.to_json())
        assert blob["entries"][0] == {"name": ["t0", "q1"], "strength": -2.0}
        assert "t0 x q1" in report.to_text()

    def test_top_k_must_be_positive(self):
        with pytest.raises(DataError):
            top_interactions(self.make(np.ones((1, 1))), top_k=0)
