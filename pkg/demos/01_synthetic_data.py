"""
Planted synthetic data
======================

Games carry random tags, players answer a short questionnaire, and a hidden
tag-by-question matrix decides who likes what.
"""

import numpy as np

from coldrec import SyntheticConfig, generate_synthetic

config = SyntheticConfig(n=300, m=120, r=12, s=6, density=0.08, interaction_rank=2, noise=0.02, rng_seed=1)
dataset, truth = generate_synthetic(config, return_truth=True)

likes = dataset.likes
print(f"{likes.n} players x {likes.m} games, {likes.values.sum()} likes (density {likes.density:.3f})")
print("first tags:", dataset.tags.tag_names[:5])
print("answers are on a centred scale:", np.unique(dataset.questions.values))

# The planted interactions are low rank: only two singular values are non-zero.
print("singular values of A:", np.round(np.linalg.svd(truth.interactions, compute_uv=False), 3))

# Every like comes from thresholding the planted score, apart from a few flips.
clean = (truth.probabilities() > 0.5).astype(int)
print("entries flipped by noise:", int((clean != likes.values).sum()))
