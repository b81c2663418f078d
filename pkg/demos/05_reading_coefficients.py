"""
Reading the coefficients
========================

Linear models can be read back directly. The interaction model should
rediscover the planted tag-question pairs.
"""

import numpy as np

from coldrec import SyntheticConfig, generate_synthetic, kron_ridge_fit, mvn_fit, tags_fit
from coldrec.interpret import top_correlated_games, top_interactions, top_tag_responses

config = SyntheticConfig(n=1500, m=300, r=10, s=6, density=0.08, interaction_rank=1, noise=0.02, rng_seed=9)
dataset, truth = generate_synthetic(config, return_truth=True)

model = kron_ridge_fit(dataset.likes, dataset.questions, dataset.tags, lam=4.0)
print(top_interactions(model, top_k=5).to_text())

planted = np.unravel_index(np.argmax(np.abs(truth.interactions)), truth.interactions.shape)
print("strongest planted pair:", dataset.tags.tag_names[planted[0]], "x", dataset.questions.question_ids[planted[1]])

# Same idea for a single tag: which answers go with it?
tag = dataset.tags.tag_names[planted[0]]
print(top_interactions(model, tag=tag, top_k=3).to_text())

# Games that tend to be liked together, and the tags one player responds to.
game = dataset.likes.game_ids[0]
print(top_correlated_games(mvn_fit(dataset.likes), game).to_text())
player = dataset.likes.player_ids[int(dataset.likes.values.sum(axis=1).argmax())]
print(top_tag_responses(tags_fit(dataset.likes, dataset.tags, 4.0), player, top_k=3).to_text())
