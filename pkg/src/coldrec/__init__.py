"""Cold-start game recommendation: collaborative and content models with a four-setting benchmark."""

from .cf import (
    AlsOptions, KnnModel, MvnModel, SvdModel, knn_predict, knn_similarity,
    mvn_fit, mvn_predict, svd_fit_als, svd_predict, svd_scores,
)
from .content import (
    InteractionModel, PopularityStats, QuestionsModel, TagsModel, kron_predict,
    kron_ridge_fit, kron_scores, popularity_normalize, questions_fit,
    questions_predict, tags_fit, tags_predict,
)
from .data import (
    Dataset, GameFeatureMatrix, GameLikeMatrix, PlayerFeatureMatrix, SyntheticConfig,
    generate_synthetic, load_game_tags, load_likes, load_player_questions, save_likes,
)
from .errors import AlignmentError, DataError, ModelFormatError, NumericalError, ParseError
from .harness import BenchmarkConfig, BenchmarkResult, grid_search, run_benchmark
from .interpret import (
    InterpretationReport, top_correlated_games, top_interactions,
    top_question_responses, top_tag_responses,
)
from .linalg import (
    Moments, RidgeProblem, correlation_from_cov, pca_project, ridge_solve,
    sample_moments, sym_eig,
)
from .metrics import MetricReport, RankedList, evaluate_player_set, ndcg_at_k, precision_at_k, rank_games
from .split import SplitBundle, SplitConfig, capability_matrix, four_way_split

__version__ = "0.1.0"
