"""
Four ways to be new
===================

A quarter of the games and a quarter of the players are set aside. That gives
one warm setting and three cold-start ones.
"""

from coldrec import SplitConfig, SyntheticConfig, four_way_split, generate_synthetic

dataset = generate_synthetic(SyntheticConfig(n=400, m=160, r=12, s=6, density=0.08, interaction_rank=2))
bundle = four_way_split(dataset, SplitConfig(rng_seed=3))

print("training block:", bundle.train_likes.values.shape)
print("test games:", len(bundle.test_game_ids), " test players:", len(bundle.test_player_ids))

labels = {
    1: "known players, known games",
    2: "known players, new games",
    3: "new players, known games",
    4: "new players, new games",
}
for setting, label in labels.items():
    print(f"setting {setting} ({label}): {len(bundle.validation[setting])} held-out likes")

# Setting-1 players keep only three seed likes in training.
row = bundle.train_likes.player_ids.index(bundle.setting1_player_ids[0])
print("seed likes left for", bundle.setting1_player_ids[0], "=", bundle.train_likes.values[row].sum())
