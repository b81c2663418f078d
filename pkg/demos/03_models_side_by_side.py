"""
Six models on one split
=======================

Collaborative models need a player's history. The content models read tags
and answers instead, so they can reach players or games never seen before.
"""

from coldrec import (
    AlsOptions, SplitConfig, SyntheticConfig, four_way_split, generate_synthetic, knn_similarity,
    kron_ridge_fit, mvn_fit, questions_fit, svd_fit_als, tags_fit,
)
from coldrec.harness import RandomScorer, evaluate_setting, scorer_for, training_dataset

dataset = generate_synthetic(SyntheticConfig(n=600, m=200, r=16, s=8, density=0.06, interaction_rank=3, rng_seed=4))
bundle = four_way_split(dataset, SplitConfig(rng_seed=4))
train = training_dataset(dataset, bundle)
R = train.likes

models = {
    "MVN": (mvn_fit(R), 1),
    "kNN (cos)": (knn_similarity(R, "cosine"), 1),
    "SVD": (svd_fit_als(R, 16, 8.0, AlsOptions(max_iters=30)), 1),
    "Tags": (tags_fit(R, train.tags, 8.0), 2),
    "Questions": (questions_fit(R, train.questions, 8.0), 3),
    "Tags X Questions": (kron_ridge_fit(R, train.questions, train.tags, 8.0), 4),
}

# Each model is scored in the setting it was built for, next to random ranking.
baseline = RandomScorer(0, train, dataset)
for name, (model, setting) in models.items():
    report = evaluate_setting(scorer_for(model, train, dataset), bundle, setting)
    rand = evaluate_setting(baseline, bundle, setting)
    print(f"{name:<17s} setting {setting}: nDCG@m {report.ndcg_at_m:.3f}  (random {rand.ndcg_at_m:.3f})")
